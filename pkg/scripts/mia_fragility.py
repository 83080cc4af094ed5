#!/usr/bin/env python3
"""Membership-inference fragility: sweep the shadow ratio around 1.0.

Trains the reference model, attacks with the forgotten rows as members and
a small held-out pool as non-members, and plots all five channels against
the ratio.
"""

import argparse
import os
import sys

import numpy as np

from unprune.mia import CHANNELS, ratio_sweep, sweep_to_csv
from unprune.numeric import SeededRng
from unprune.reference import reference_run
from unprune.svg import line_svg


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--nonmembers", type=int, default=40)
    parser.add_argument("--out", default="mia")
    args = parser.parse_args()

    run = reference_run(args.seed)
    ratios = [round(0.8 + 0.05 * i, 2) for i in range(9)]
    reports = ratio_sweep(
        run.dense, run.train_data, run.split.forget_indices,
        run.test_data, np.arange(args.nonmembers), ratios,
        SeededRng(args.seed).split("mia"),
    )
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"mia_sweep_seed{args.seed}.csv")
    sweep_to_csv(reports, csv_path)
    series = {c: [(r.ratio, r.score(c)) for r in reports] for c in CHANNELS}
    svg_path = os.path.join(args.out, f"mia_sweep_seed{args.seed}.svg")
    line_svg(series, "shadow ratio", "attack score", svg_path)

    corr = [r.correctness for r in reports]
    print(f"correctness across ratios: "
          + " ".join(f"{c:.3f}" for c in corr))
    print(f"spread = {max(corr) - min(corr):.3f} -> {csv_path}, {svg_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
