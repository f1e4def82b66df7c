#!/usr/bin/env python3
"""Measured against predicted search-space growth.

Runs the velocity model at delta 1, 2, 3 over crowded videos (N0=50)
and prints the ratio of total stage-score evaluations between
consecutive deltas next to the ((delta+1/2)/(delta-1/2))^2 prediction.
The full sweep takes a few minutes per replicate.
"""

import argparse
import csv
import json
import os
import sys
import tempfile

from velotrack.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output", default="results/complexity", help="output directory")
    ap.add_argument("--replicates", type=int, default=3)
    ap.add_argument("--frames", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    args = ap.parse_args()

    grid = {
        "N0": [50],
        "sigma": [1.0],
        "f": args.frames,
        "replicates": args.replicates,
        "methods": ["tri"],
        "deltas": [1, 2, 3],
        "seed": args.seed,
    }
    fd, cfg_path = tempfile.mkstemp(suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(grid, fh)
        argv = ["experiment", "--config", cfg_path, "--output", args.output]
        if args.jobs is not None:
            argv += ["--jobs", str(args.jobs)]
        code = cli_main(argv)
    finally:
        os.unlink(cfg_path)
    if code != 0:
        return code

    with open(os.path.join(args.output, "aggregate.csv"), newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["method"] == "tri"]
    print(f"{'delta':>5} {'evals/video':>14} {'ratio':>8} {'predicted':>10}")
    for r in sorted(rows, key=lambda r: int(r["delta"])):
        ratio = r["eval_ratio"] or "-"
        theory = r["eval_ratio_theory"] or "-"
        if ratio != "-":
            ratio = f"{float(ratio):.3f}"
        if theory != "-":
            theory = f"{float(theory):.3f}"
        print(
            f"{r['delta']:>5} {float(r['eval_count_mean']):>14.0f} {ratio:>8} {theory:>10}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
