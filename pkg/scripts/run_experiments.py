#!/usr/bin/env python3
"""Regenerate every learning curve, verdict and checkpoint report from configs/.

Outputs go to ``results/<config name>/`` (CSV and JSON). Usage::

    python3 scripts/run_experiments.py [--out results] [--reps N]
"""
import argparse
import sys
from pathlib import Path

from agnostic_erm.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent
CURVE_CONFIGS = ["finite_gap", "thresholds_benign"]
CONSTRUCTION_CONFIGS = ["eluder_inverse_log", "vc_eluder_power"]


def run(argv) -> int:
    print("$ agnostic-erm " + " ".join(argv), flush=True)
    return cli(argv)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--reps", type=int, help="override replications")
    args = ap.parse_args()
    extra = ["--reps", str(args.reps)] if args.reps else []
    status = 0
    for name in CURVE_CONFIGS:
        cfg = str(ROOT / "configs" / f"{name}.json")
        out = str(Path(args.out) / name)
        status |= run(["simulate", "--config", cfg, "--out", out, *extra])
        status |= run(["classify", "--curve", str(Path(out) / "curve.csv"), "--out", out])
    for name in CONSTRUCTION_CONFIGS:
        cfg = str(ROOT / "configs" / f"{name}.json")
        out = str(Path(args.out) / name)
        status |= run(["construct", "--config", cfg, "--out", out])
        status |= run(["checkpoints", "--config", cfg, "--out", out, "--max-n", str(10 ** 15), *extra])
    return status


if __name__ == "__main__":
    sys.exit(main())
