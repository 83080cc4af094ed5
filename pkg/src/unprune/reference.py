"""The frozen desk-scale reference tasks used by tests and example scripts.

Both tasks train with full-batch gradient descent, so the only difference
between a run on the full data and a run on the retained data is the deleted
rows' gradient term -- the signal un-pruning is supposed to recover. The
hyperparameters below were calibrated once and are treated as constants;
the acceptance suite depends on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .core import UnpruneConfig
from .data import Dataset, DeletionSplit, gen_blobs, split_delete
from .model import MaskedModel
from .numeric import SeededRng
from .oracle import build_model
from .prune import prune_magnitude, prune_structured_l2
from .train import TrainCfg, train_with_cfg
from .unlearn import UnlearnConfig

REFERENCE_SEEDS = (0, 1, 2, 3, 4)

# Unstructured reference: 2-64-32-2 on overlapping two-class blobs.
REF_DIMS = [2, 64, 32, 2]
REF_N_PER_CLASS = 200
REF_TEST_PER_CLASS = 250
REF_SPREAD = 2.0
REF_DELETE_RATIO = 0.1
REF_TRAIN = TrainCfg(epochs=2800, lr=1.0, batch_size=2 * REF_N_PER_CLASS)
REF_SPARSITY = 0.6
REF_GROW = 0.05
REF_ITERATIONS = 3
REF_GA = UnlearnConfig(method="gradient_ascent", steps=40, rate=3e-4,
                       batch_size=2 * REF_N_PER_CLASS)
REF_FT = UnlearnConfig(method="finetune", steps=50, rate=0.3,
                       batch_size=2 * REF_N_PER_CLASS)

# Structured reference: 2-32-32-2, whole-neuron masks.
STRUCT_DIMS = [2, 32, 32, 2]
STRUCT_N_PER_CLASS = 400
STRUCT_SPREAD = 2.0
STRUCT_TRAIN = TrainCfg(epochs=1500, lr=1.0, batch_size=2 * STRUCT_N_PER_CLASS)
STRUCT_FRACTION = 0.75
STRUCT_GROW = 0.02
STRUCT_ITERATIONS = 3
STRUCT_GA = UnlearnConfig(method="gradient_ascent", steps=5, rate=1e-4,
                          batch_size=2 * STRUCT_N_PER_CLASS)
STRUCT_FT = UnlearnConfig(method="finetune", steps=150, rate=0.3,
                          batch_size=2 * STRUCT_N_PER_CLASS)


@dataclass
class ReferenceRun:
    """Everything one seed of a reference task produces before un-pruning."""
    seed: int
    train_data: Dataset
    test_data: Dataset
    split: DeletionSplit
    dense: MaskedModel      # trained on all of D, not pruned
    pruned: MaskedModel     # dense clone pruned to the reference sparsity


def reference_data(seed: int, n_per_class: int = REF_N_PER_CLASS,
                   spread: float = REF_SPREAD,
                   delete_ratio: float = REF_DELETE_RATIO,
                   ) -> tuple[Dataset, Dataset, DeletionSplit]:
    root = SeededRng(seed)
    train = gen_blobs(root.split("data-train"), n_per_class, 2, 2, spread,
                      name="blobs-train")
    test = gen_blobs(root.split("data-test"), REF_TEST_PER_CLASS, 2, 2, spread,
                     name="blobs-test")
    split = split_delete(train, delete_ratio, root.split("delete"))
    return train, test, split


def reference_run(seed: int) -> ReferenceRun:
    """Train the unstructured reference model for one seed and prune it."""
    train_data, test_data, split = reference_data(seed)
    dense = build_model(REF_DIMS, seed)
    train_with_cfg(dense, train_data, np.arange(train_data.n), REF_TRAIN,
                   SeededRng(seed).split("train"))
    pruned = dense.clone()
    prune_magnitude(pruned, REF_SPARSITY, scope="global")
    return ReferenceRun(seed, train_data, test_data, split, dense, pruned)


def structured_run(seed: int) -> ReferenceRun:
    """Train the structured reference model for one seed and prune neurons."""
    train_data, test_data, split = reference_data(
        seed, n_per_class=STRUCT_N_PER_CLASS, spread=STRUCT_SPREAD,
    )
    dense = build_model(STRUCT_DIMS, seed)
    train_with_cfg(dense, train_data, np.arange(train_data.n), STRUCT_TRAIN,
                   SeededRng(seed).split("train"))
    pruned = dense.clone()
    prune_structured_l2(pruned, STRUCT_FRACTION)
    return ReferenceRun(seed, train_data, test_data, split, dense, pruned)


def reference_unprune_config(method: str, init_strategy: str = "original",
                             ) -> UnpruneConfig:
    unlearn = {"gradient_ascent": REF_GA, "finetune": REF_FT}.get(
        method, UnlearnConfig(method=method, batch_size=2 * REF_N_PER_CLASS)
    )
    return UnpruneConfig(
        original_sparsity=REF_SPARSITY, grow_per_iter=REF_GROW,
        iterations=REF_ITERATIONS, unlearn=unlearn,
        init_strategy=init_strategy,
    )


def structured_unprune_config(method: str) -> UnpruneConfig:
    unlearn = {"gradient_ascent": STRUCT_GA, "finetune": STRUCT_FT}.get(
        method, UnlearnConfig(method=method, batch_size=2 * STRUCT_N_PER_CLASS)
    )
    return UnpruneConfig(
        original_sparsity=STRUCT_FRACTION, grow_per_iter=STRUCT_GROW,
        iterations=STRUCT_ITERATIONS, unlearn=unlearn,
    )


def reference_config(record_timing: bool = True) -> ExperimentConfig:
    """The full-grid ExperimentConfig equivalent of the reference task."""
    return ExperimentConfig(
        dataset_kind="blobs",
        classes=2,
        n_per_class=REF_N_PER_CLASS,
        test_per_class=REF_TEST_PER_CLASS,
        dim=2,
        spread=REF_SPREAD,
        hidden=(64, 32),
        train=REF_TRAIN,
        delete_ratio=REF_DELETE_RATIO,
        prune_mode="unstructured",
        sparsities=(REF_SPARSITY,),
        scope="global",
        grow_per_iter=REF_GROW,
        iterations=REF_ITERATIONS,
        methods=("gradient_ascent", "finetune"),
        unlearn_defaults=UnlearnConfig(batch_size=2 * REF_N_PER_CLASS),
        unlearn_overrides={
            "gradient_ascent": {"steps": REF_GA.steps, "rate": REF_GA.rate},
            "finetune": {"steps": REF_FT.steps, "rate": REF_FT.rate},
        },
        seeds=REFERENCE_SEEDS,
        record_timing=record_timing,
    ).validate()
