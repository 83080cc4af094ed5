#!/usr/bin/env python3
"""Original versus random re-initialization inside the un-pruning loop.

Reports the mean mask overlap with the retrain+reprune oracle for both
strategies, per unlearning method.
"""

import argparse
import sys

import numpy as np

from unprune.core import unprune
from unprune.metrics import MaskPair, iom
from unprune.numeric import SeededRng
from unprune.oracle import retrain_reprune
from unprune.reference import (
    REF_DIMS,
    REF_SPARSITY,
    REF_TRAIN,
    REFERENCE_SEEDS,
    reference_run,
    reference_unprune_config,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--methods", default="gradient_ascent,finetune")
    args = parser.parse_args()

    runs = {seed: reference_run(seed) for seed in REFERENCE_SEEDS}
    oracles = {
        seed: retrain_reprune(run.train_data, run.split, REF_DIMS, REF_TRAIN,
                              REF_SPARSITY, seed)[0]
        for seed, run in runs.items()
    }
    for method in args.methods.split(","):
        for strategy in ("original", "random"):
            values = []
            for seed, run in runs.items():
                model = run.pruned.clone()
                cfg = reference_unprune_config(method, strategy)
                model, _ = unprune(model, run.train_data, run.split, cfg,
                                   SeededRng(seed).split(f"unprune/{method}"),
                                   test_data=run.test_data)
                values.append(iom(MaskPair.from_models(model, oracles[seed])))
            print(f"{method:16s} init={strategy:8s} "
                  f"mean IoM={np.mean(values):.4f} "
                  f"per-seed {['%.4f' % v for v in values]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
