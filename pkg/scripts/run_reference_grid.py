#!/usr/bin/env python3
"""Run the reference un-pruning grid and emit CSV/JSON plus scatter plots.

Equivalent to: unprune run --config configs/reference.ini --out results
"""

import argparse
import os
import sys

from unprune.experiment import emit_scatter, run_experiment
from unprune.reference import reference_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--no-timing", action="store_true",
                        help="write 0.000 wall times for reproducible output")
    args = parser.parse_args()

    cfg = reference_config(record_timing=not args.no_timing)
    report = run_experiment(cfg, out_dir=args.out)
    for x_metric in ("iom", "iou"):
        emit_scatter(report, x_metric, "ua",
                     os.path.join(args.out, f"scatter_{x_metric}_ua.svg"))
    print(f"{len(report.rows)} rows -> {args.out}/results.csv")
    for err in report.errors:
        print(f"failed cell: {err}", file=sys.stderr)
    return 2 if report.errors else 0


if __name__ == "__main__":
    sys.exit(main())
