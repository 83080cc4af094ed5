"""Shared fixtures: the reference runs and oracles are expensive, build once."""

import numpy as np
import pytest

from unprune.oracle import build_model
from unprune.prune import prune_magnitude, prune_structured_l2
from unprune.reference import (
    REF_DIMS,
    REF_TRAIN,
    REFERENCE_SEEDS,
    STRUCT_DIMS,
    STRUCT_FRACTION,
    STRUCT_TRAIN,
    reference_run,
    structured_run,
)
from unprune.numeric import SeededRng
from unprune.train import train_with_cfg


@pytest.fixture(scope="session")
def ref_runs():
    """Trained+pruned unstructured reference models, one per seed."""
    return {seed: reference_run(seed) for seed in REFERENCE_SEEDS}


@pytest.fixture(scope="session")
def ref_oracle_dense(ref_runs):
    """Dense retrain-on-retained models (the oracle before its prune)."""
    out = {}
    for seed, run in ref_runs.items():
        model = build_model(REF_DIMS, seed)
        train_with_cfg(model, run.train_data, run.split.retain_indices,
                       REF_TRAIN, SeededRng(seed).split("train"))
        out[seed] = model
    return out


@pytest.fixture(scope="session")
def ref_oracles(ref_oracle_dense):
    """Retrain+reprune oracles at the sparsity grid, per seed."""
    out = {}
    for seed, dense in ref_oracle_dense.items():
        for sparsity in (0.4, 0.6, 0.95):
            model = dense.clone()
            prune_magnitude(model, sparsity, scope="global")
            out[(seed, sparsity)] = model
    return out


@pytest.fixture(scope="session")
def struct_runs():
    """Trained+pruned structured reference models, one per seed."""
    return {seed: structured_run(seed) for seed in REFERENCE_SEEDS}


@pytest.fixture(scope="session")
def struct_oracles(struct_runs):
    out = {}
    for seed, run in struct_runs.items():
        model = build_model(STRUCT_DIMS, seed)
        train_with_cfg(model, run.train_data, run.split.retain_indices,
                       STRUCT_TRAIN, SeededRng(seed).split("train"))
        prune_structured_l2(model, STRUCT_FRACTION)
        out[seed] = model
    return out
