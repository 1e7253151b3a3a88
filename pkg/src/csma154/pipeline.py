"""Run analysis and/or simulation over the sweep points of a scenario and
write the result files."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import report
from .config import RunConfig
from .qna import qna_sweep
from .simulator import SimConfig, SimStats, replicate
from .solver import SolverError, SolverResult, solve
from .timing import SYMBOLS_PER_SECOND

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3
MODES = ("analyze", "simulate", "compare", "sweep")


@dataclass
class PointResult:
    scale: float
    lambda_pps: float
    solver: SolverResult | None = None
    analysis: dict | None = None
    sim: SimStats | None = None
    sim_values: dict | None = None
    comparison: list = field(default_factory=list)
    error: str = ""

    @property
    def converged(self) -> bool:
        return self.solver is not None and self.solver.converged


def rate_label(cfg: RunConfig, scale: float) -> float:
    """x coordinate of a sweep point: the largest per-source rate in pkts/s."""
    rates = [r for r in cfg.base_rates_pps().values() if r > 0]
    return max(rates) * scale if rates else scale


def sim_config(cfg: RunConfig, net, seed=None, reps=None) -> SimConfig:
    return SimConfig(net=net, params=cfg.mac, measurement=cfg.measurement,
                     warmup=cfg.warmup, seed=cfg.seed if seed is None else seed,
                     replications=cfg.replications if reps is None else reps,
                     cca_sample=cfg.cca_sample,
                     ack_occupies_channel=cfg.ack_occupies_channel,
                     workers=cfg.workers)


def evaluate_point(cfg: RunConfig, scale: float, analysis=True, simulate=True,
                   seed=None, reps=None) -> PointResult:
    net = cfg.network_at(scale)
    pt = PointResult(scale, rate_label(cfg, scale))
    if analysis:
        try:
            pt.solver = solve(net, cfg.mac, cfg.solver)
        except (SolverError, ZeroDivisionError) as e:
            pt.error = str(e)
            log.warning("scale %g: solver aborted: %s", scale, e)
        if pt.solver is not None:
            delays = qna_sweep(net, pt.solver, variant=cfg.qna_variant)
            pt.analysis = report.analysis_values(net, pt.solver, delays)
            if not pt.solver.converged:
                log.warning("scale %g: no convergence after %d iterations (residual %.3g)",
                            scale, pt.solver.iterations, pt.solver.residual)
    if simulate:
        pt.sim = replicate(sim_config(cfg, net, seed, reps))
        pt.sim_values = report.sim_values(pt.sim)
    if pt.analysis is not None and pt.sim_values is not None:
        pt.comparison = report.compare(pt.analysis, pt.sim_values)
    return pt


def run_pipeline(cfg: RunConfig, mode: str = "sweep", out_dir: Path | None = None,
                 seed: int | None = None, reps: int | None = None,
                 no_sim: bool = False) -> tuple[int, list[PointResult]]:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    out = Path(out_dir) if out_dir is not None else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    do_analysis = mode != "simulate"
    do_sim = mode != "analyze" and not no_sim

    points = []
    for scale in cfg.sweep:
        log.info("evaluating scale %g", scale)
        points.append(evaluate_point(cfg, scale, do_analysis, do_sim, seed, reps))

    if do_analysis:
        rows = []
        for pt in points:
            if pt.analysis is not None:
                rows += report.analysis_rows(pt.lambda_pps, pt.analysis, pt.converged)
        report.write_csv(out / "analysis.csv", report.ANALYSIS_COLUMNS, rows)
    if do_sim:
        rows = []
        for pt in points:
            rows += report.sim_rows(pt.lambda_pps, pt.sim_values)
        report.write_csv(out / "sim.csv", report.SIM_COLUMNS, rows)
    if do_analysis and do_sim:
        rows = []
        for pt in points:
            rows += report.compare_rows(pt.lambda_pps, pt.comparison)
        report.write_csv(out / "compare.csv", report.COMPARE_COLUMNS, rows)

    tables = report.plot_data([{"lambda_pps": pt.lambda_pps, "analysis": pt.analysis,
                                "sim": pt.sim_values} for pt in points])
    entries = report.write_plot_data(out, tables) if "csv" in cfg.formats else []
    figures = report.render_figures(out, tables) if "png" in cfg.formats else []
    report.write_manifest(out, entries, figures)

    failed = [pt for pt in points if do_analysis and not pt.converged]
    report.write_meta(out / "run.meta", _meta(cfg, mode, points, seed, reps, do_sim))
    return (EXIT_NONCONVERGED if failed else EXIT_OK), points


def _meta(cfg, mode, points, seed, reps, do_sim):
    per_s = SYMBOLS_PER_SECOND
    m = {
        "config": cfg.source,
        "mode": mode,
        "sweep_scales": ", ".join(repr(s) for s in cfg.sweep),
        "mac": repr(cfg.mac),
        "transmission_period_symbols": cfg.mac.T,
        "solver_tolerance": cfg.solver.tolerance,
        "solver_max_iterations": cfg.solver.max_iterations,
        "solver_damping": cfg.solver.damping,
        "solver_note": "convergence test and damping are engineering choices",
        "saturated_goodput": cfg.solver.saturated_goodput,
        "qna_variant": cfg.qna_variant,
        "qna_backoff_model": "exponential with rate beta (simulator draws uniform slots)",
    }
    if do_sim:
        m.update({
            "sim_seed": cfg.seed if seed is None else seed,
            "sim_replications": cfg.replications if reps is None else reps,
            "sim_measurement_s": cfg.measurement / per_s,
            "sim_warmup_s": "default" if cfg.warmup is None else cfg.warmup / per_s,
            "sim_cca_sample": cfg.cca_sample,
            "sim_ack_occupies_channel": cfg.ack_occupies_channel,
        })
    for pt in points:
        key = f"point[{pt.lambda_pps!r}]"
        if pt.solver is not None:
            m[key + ".regime"] = pt.solver.regime
            m[key + ".converged"] = pt.solver.converged
            m[key + ".iterations"] = pt.solver.iterations
            m[key + ".residual"] = repr(pt.solver.residual)
        if pt.error:
            m[key + ".error"] = pt.error
        if pt.analysis is not None:
            unstable = [i for i, v in pt.analysis.items() if v["sojourn"] == float("inf")]
            m[key + ".unstable_nodes"] = " ".join(map(str, unstable)) or "none"
        if pt.sim is not None:
            m[key + ".sim_events"] = sum(r.events for r in pt.sim.runs)
            m[key + ".sim_conservation"] = all(r.conservation_ok() for r in pt.sim.runs)
    return m
