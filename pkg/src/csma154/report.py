"""Tabular and graphical output: CSV tables, per-metric plot data and figures.

All reported values are in SI units: rates in 1/s, delays in seconds.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .qna import DelayReport
from .simulator import SimStats
from .solver import SolverResult
from .timing import SYMBOLS_PER_SECOND
from .topology import NetworkSpec

COMPARED = ("alpha", "gamma", "p", "delta", "theta", "q", "b", "beta", "sojourn",
            "delivery", "e2e_delay")
ANALYSIS_COLUMNS = ("lambda_pps", "node", "alpha", "gamma", "p", "delta", "theta",
                    "nu", "q", "b", "beta", "sigma", "t_eff", "sojourn", "delivery",
                    "e2e_delay", "converged")
SIM_COLUMNS = ("lambda_pps", "node", "metric", "mean", "half_width", "n")
COMPARE_COLUMNS = ("lambda_pps", "node", "metric", "analysis", "sim_mean",
                   "sim_half_width", "rel_error")
REL_FLOOR = 1e-12


@dataclass(frozen=True)
class ComparisonRow:
    node: int
    metric: str
    analysis: float
    sim_mean: float
    sim_half_width: float
    rel_error: float


def relative_error(analysis: float, sim: float, floor: float = REL_FLOOR) -> float:
    return abs(analysis - sim) / max(abs(sim), floor)


def analysis_values(net: NetworkSpec, result: SolverResult,
                    delays: DelayReport | None) -> dict[int, dict[str, float]]:
    """Per-node analytical measures keyed like the simulator's estimates."""
    per_s = SYMBOLS_PER_SECOND
    out = {}
    for i in net.ids:
        s = result.states[i]
        row = {"alpha": s.alpha, "gamma": s.gamma, "p": s.p, "delta": s.delta,
               "theta": s.theta * per_s, "nu": s.nu * per_s, "q": s.q, "b": s.b,
               "beta": s.beta * per_s, "sigma": s.sigma * per_s,
               "t_eff": s.t_eff / per_s,
               "sojourn": math.nan, "delivery": math.nan, "e2e_delay": math.nan}
        if delays is not None:
            row["sojourn"] = delays.nodes[i].sojourn / per_s
            if i in delays.delivery:
                row["delivery"] = delays.delivery[i]
                row["e2e_delay"] = delays.end_to_end[i] / per_s
        out[i] = row
    return out


def sim_values(stats: SimStats) -> dict[int, dict[str, tuple[float, float, int]]]:
    out = {}
    for i, metrics in stats.node.items():
        out[i] = {m: (e.mean, e.half_width, e.n) for m, e in metrics.items()}
    for i, metrics in stats.source.items():
        out.setdefault(i, {}).update(
            {m: (e.mean, e.half_width, e.n) for m, e in metrics.items()})
    return out


def compare(analysis: dict[int, dict[str, float]],
            sim: dict[int, dict[str, tuple[float, float, int]]],
            metrics=COMPARED) -> list[ComparisonRow]:
    if set(analysis) != set(sim):
        raise ValueError("analysis and simulation cover different nodes")
    rows = []
    for i in sorted(analysis):
        for m in sorted(metrics):
            if m not in analysis[i] or m not in sim[i]:
                continue
            a = analysis[i][m]
            mean, hw = sim[i][m][0], sim[i][m][1]
            if math.isnan(a) and math.isnan(mean):
                continue
            rows.append(ComparisonRow(i, m, a, mean, hw, relative_error(a, mean)))
    return rows


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def analysis_rows(lam_pps, values, converged):
    for i in sorted(values):
        row = {"lambda_pps": lam_pps, "node": i, "converged": converged}
        row.update(values[i])
        yield row


def sim_rows(lam_pps, values):
    for i in sorted(values):
        for m in sorted(values[i]):
            mean, hw, n = values[i][m]
            yield {"lambda_pps": lam_pps, "node": i, "metric": m, "mean": mean,
                   "half_width": hw, "n": n}


def compare_rows(lam_pps, rows: list[ComparisonRow]):
    for r in rows:
        yield {"lambda_pps": lam_pps, "node": r.node, "metric": r.metric,
               "analysis": r.analysis, "sim_mean": r.sim_mean,
               "sim_half_width": r.sim_half_width, "rel_error": r.rel_error}


def plot_data(points: list[dict]) -> dict[str, list[dict]]:
    """Rearrange sweep points into one table per metric.

    Each point is ``{"lambda_pps": x, "analysis": {...}, "sim": {...}}``.
    """
    metrics = [m for m in COMPARED + ("nu",)]
    tables = {}
    for m in metrics:
        rows = []
        for pt in points:
            row = {"lambda_pps": pt["lambda_pps"]}
            for i, vals in sorted((pt.get("analysis") or {}).items()):
                if m in vals:
                    row[f"analysis_{i}"] = vals[m]
            for i, vals in sorted((pt.get("sim") or {}).items()):
                if m in vals:
                    row[f"sim_{i}"] = vals[m][0]
                    row[f"sim_hw_{i}"] = vals[m][1]
            rows.append(row)
        if any(len(r) > 1 for r in rows):
            tables[m] = rows
    return tables


def write_plot_data(out_dir: Path, tables: dict[str, list[dict]]) -> list[dict]:
    entries = []
    for m, rows in tables.items():
        cols = ["lambda_pps"]
        for r in rows:
            cols += [c for c in r if c not in cols]
        path = out_dir / f"plot_{m}.csv"
        write_csv(path, cols, ({c: r.get(c, math.nan) for c in cols} for r in rows))
        entries.append({"metric": m, "file": path.name, "x": "lambda_pps",
                        "series": cols[1:]})
    return entries


LABELS = {"alpha": "CCA failure probability", "gamma": "packet failure probability",
          "p": "collision probability", "delta": "discard probability",
          "theta": "goodput (pkts/s)", "nu": "arrival rate (pkts/s)",
          "q": "non-empty probability", "b": "backoff fraction",
          "beta": "CCA rate in backoff (1/s)", "sojourn": "mean sojourn (s)",
          "delivery": "delivery probability", "e2e_delay": "end-to-end delay (s)"}


def render_figures(out_dir: Path, tables: dict[str, list[dict]],
                   nodes: list[int] | None = None) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for m, rows in tables.items():
        x = [r["lambda_pps"] for r in rows]
        ids = sorted({int(k.split("_")[-1]) for r in rows for k in r
                      if k.startswith(("analysis_", "sim_")) and not k.startswith("sim_hw")})
        if nodes:
            ids = [i for i in ids if i in nodes]
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for k, i in enumerate(ids):
            color = f"C{k % 10}"
            ya = [r.get(f"analysis_{i}", math.nan) for r in rows]
            if any(not math.isnan(v) for v in ya):
                ax.plot(x, ya, "-", color=color, label=f"node {i} analysis")
            ys = [r.get(f"sim_{i}", math.nan) for r in rows]
            if any(not math.isnan(v) for v in ys):
                err = [0.0 if math.isnan(v) else v
                       for v in (r.get(f"sim_hw_{i}", math.nan) for r in rows)]
                ax.errorbar(x, ys, yerr=err, fmt="o", ms=3, color=color, capsize=2,
                            label=f"node {i} sim")
        if m == "delta":
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel("packet generation rate per source (pkts/s)")
        ax.set_ylabel(LABELS.get(m, m))
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=6, ncol=2)
        fig.tight_layout()
        path = out_dir / f"fig_{m}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def write_manifest(out_dir: Path, entries: list[dict], figures: list[Path]) -> Path:
    path = out_dir / "plots.json"
    payload = {"plots": entries, "figures": [p.name for p in figures]}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def write_meta(path: Path, items: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {v}\n")
    return path


def read_meta(path: Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out

