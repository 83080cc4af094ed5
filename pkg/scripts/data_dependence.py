#!/usr/bin/env python3
"""Data dependence of pruned topologies: train+prune on D versus on D_r.

Same seed, same schedule, 10% deleted. Reports the mask overlap (IoU) under
both global and per-layer magnitude thresholds at 60% sparsity.
"""

import argparse
import csv
import sys

import numpy as np

from unprune.metrics import MaskPair, iou
from unprune.numeric import SeededRng
from unprune.oracle import build_model
from unprune.prune import prune_magnitude
from unprune.reference import (
    REF_DIMS,
    REF_SPARSITY,
    REF_TRAIN,
    REFERENCE_SEEDS,
    reference_data,
)
from unprune.train import train_with_cfg


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data_dependence.csv")
    args = parser.parse_args()

    rows = []
    for seed in REFERENCE_SEEDS:
        train_data, _, split = reference_data(seed)
        values = {}
        for scope in ("global", "per_layer"):
            masks = {}
            for name, indices in (("full", np.arange(train_data.n)),
                                  ("retain", split.retain_indices)):
                model = build_model(REF_DIMS, seed)
                train_with_cfg(model, train_data, indices, REF_TRAIN,
                               SeededRng(seed).split("train"))
                prune_magnitude(model, REF_SPARSITY, scope=scope)
                masks[name] = model
            values[scope] = iou(MaskPair.from_models(masks["full"],
                                                     masks["retain"]))
        rows.append((seed, values["global"], values["per_layer"]))
        print(f"seed {seed}: IoU global={values['global']:.4f} "
              f"per_layer={values['per_layer']:.4f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "iou_global", "iou_per_layer"])
        for seed, g, p in rows:
            writer.writerow([seed, f"{g:.10g}", f"{p:.10g}"])
    print(f"-> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
