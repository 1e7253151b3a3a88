"""Command-line entry point: ``csma154 {analyze,simulate,compare,sweep}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, bundled, load_config
from .pipeline import EXIT_CONFIG, MODES, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="csma154",
        description="Fixed-point analysis and simulation of beacon-less "
                    "IEEE 802.15.4 tree networks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "solve the analytical model at every sweep point",
        "simulate": "run the simulator at every sweep point",
        "compare": "analysis and simulation side by side",
        "sweep": "like compare, over the [sweep] list; --no-sim for analysis only",
    }
    for name in MODES:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True,
                       help="scenario file, or 'fig11'/'fig12' for a bundled one")
        p.add_argument("--out", help="output directory (default from config)")
        p.add_argument("--seed", type=int, help="base simulation seed")
        p.add_argument("--reps", type=int, help="number of replications")
        p.add_argument("--no-sim", action="store_true", help="skip the simulator")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    path = args.config
    if path in ("fig11", "fig12"):
        path = bundled(path)
    try:
        cfg = load_config(path)
        if args.reps is not None and args.reps < 1:
            raise ConfigError("--reps must be >= 1")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    status, points = run_pipeline(cfg, args.command, args.out, args.seed, args.reps,
                                  args.no_sim)
    for pt in points:
        flag = "" if pt.solver is None or pt.converged else "  (not converged)"
        print(f"lambda = {pt.lambda_pps:g} pkts/s{flag}")
    return status


if __name__ == "__main__":
    sys.exit(main())
