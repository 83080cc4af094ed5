"""Pluggable unlearning methods: the U step of the un-pruning loop.

Three desk-scale families plus a no-op ablation:

  * gradient_ascent  -- full-batch ascent on the forget-set loss
  * fisher_forgetting -- Gaussian scrubbing scaled by the inverse diagonal
    Fisher (parameters important for the retain set receive less noise)
  * finetune          -- SGD descent on the retain set only
  * noop              -- identity, for ablations

All methods consume and return the same model shape, so the un-pruning loop
runs unmodified with any of them. With ``dense=False`` gradients flow only
to parameters with mask 1 (masked-out entries stay exactly 0); ``dense=True``
ignores masks entirely, which is what the loop uses after re-initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, DeletionSplit
from .errors import ConfigError, InputError, NumericError
from .model import GradientSet, MaskedModel, _forward_trace, backward
from .numeric import SeededRng, matmul, softmax

METHODS = ("noop", "gradient_ascent", "fisher_forgetting", "finetune")

FISHER_EPS = 1e-8  # stabilizer against division by zero on dead parameters


@dataclass(frozen=True)
class UnlearnConfig:
    method: str = "noop"
    steps: int = 1
    rate: float = 1e-3
    fisher_noise_scale: float = 1e-3
    batch_size: int = 64
    fisher_on: str = "retain"  # which rows the Fisher is estimated on

    def validate(self) -> "UnlearnConfig":
        if self.method not in METHODS:
            raise ConfigError(f"unknown unlearning method {self.method!r}")
        if self.fisher_on not in ("retain", "forget", "all"):
            raise ConfigError(f"unknown fisher_on {self.fisher_on!r}")
        if self.method != "noop":
            if self.steps < 1:
                raise ConfigError("steps must be >= 1 for non-noop methods")
            if self.rate <= 0 and self.method != "fisher_forgetting":
                raise ConfigError("rate must be > 0 for gradient-based methods")
        return self


def _ascend(model: MaskedModel, grads: GradientSet, rate: float) -> None:
    for w, b, gw, gb in zip(model.weights, model.biases, grads.weights, grads.biases):
        w += rate * gw
        b += rate * gb


def unlearn_gradient_ascent(
    model: MaskedModel,
    dataset: Dataset,
    forget_rows: np.ndarray,
    steps: int,
    rate: float,
    dense: bool = False,
) -> MaskedModel:
    """Full-batch gradient ascent on the forget-set loss, in place."""
    forget_rows = np.asarray(forget_rows, dtype=np.int64)
    if len(forget_rows) == 0:
        raise InputError("forget row set is empty")
    x = dataset.inputs[forget_rows]
    y = dataset.labels[forget_rows]
    for step in range(steps):
        loss, grads = backward(model, x, y, masked=not dense)
        if not np.isfinite(loss):
            raise NumericError(f"gradient ascent diverged at step {step}")
        _ascend(model, grads, rate)
    return model


def fisher_diag(
    model: MaskedModel,
    dataset: Dataset,
    rows: np.ndarray,
    dense: bool = False,
) -> GradientSet:
    """Diagonal empirical Fisher: mean over rows of squared per-sample grads.

    For an MLP the per-sample weight gradient is an outer product
    delta_i x_i^T, so the squared sum factorizes and the whole estimate is
    one batched pass (deterministic reduction order).
    """
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        raise InputError("fisher row set is empty")
    x = dataset.inputs[rows]
    y = dataset.labels[rows]
    acts, pre = _forward_trace(model, x, masked=not dense)
    # Per-sample gradient of the per-sample loss: no 1/batch factor.
    delta = softmax(acts[-1])
    delta[np.arange(len(rows)), y] -= 1.0
    n = float(len(rows))
    f_w = [None] * len(model.layers)
    f_b = [None] * len(model.layers)
    for l in range(len(model.layers) - 1, -1, -1):
        f_w[l] = matmul((delta ** 2).T, acts[l] ** 2) / n
        if not dense:
            f_w[l] = f_w[l] * model.masks[l]
        f_b[l] = (delta ** 2).mean(axis=0)
        if l > 0:
            w_eff = model.weights[l] * model.masks[l] if not dense else model.weights[l]
            delta = matmul(delta, w_eff)
            if model.layers[l - 1].activation == "relu":
                delta = delta * (pre[l - 1] > 0.0)
    return GradientSet(weights=f_w, biases=f_b)


def unlearn_fisher_forgetting(
    model: MaskedModel,
    split: DeletionSplit,
    dataset: Dataset,
    noise_scale: float,
    rng: SeededRng,
    dense: bool = False,
    fisher_on: str = "retain",
) -> MaskedModel:
    """Scrub by Fisher-scaled Gaussian noise: theta_i += N(0, s^2/(F_ii+eps)).

    The Fisher defaults to the retain set (the scrubbing convention), so
    parameters that matter for retained data receive less noise.
    """
    if noise_scale < 0:
        raise InputError(f"noise scale must be >= 0, got {noise_scale}")
    if noise_scale == 0:
        return model
    rows = {
        "retain": split.retain_indices,
        "forget": split.forget_indices,
        "all": np.arange(dataset.n),
    }[fisher_on]
    fisher = fisher_diag(model, dataset, rows, dense=dense)
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        std_w = noise_scale / np.sqrt(fisher.weights[l] + FISHER_EPS)
        noise_w = rng.normal(w.size, 0.0, 1.0).reshape(w.shape) * std_w
        if not dense:
            noise_w *= model.masks[l]
        w += noise_w
        std_b = noise_scale / np.sqrt(fisher.biases[l] + FISHER_EPS)
        b += rng.normal(b.size, 0.0, 1.0) * std_b
    return model


def unlearn_finetune(
    model: MaskedModel,
    dataset: Dataset,
    retain_rows: np.ndarray,
    steps: int,
    rate: float,
    batch_size: int,
    rng: SeededRng,
    dense: bool = False,
) -> MaskedModel:
    """SGD descent on the retain set only, for a fixed number of steps."""
    retain_rows = np.asarray(retain_rows, dtype=np.int64)
    if len(retain_rows) == 0:
        raise InputError("retain row set is empty")
    if batch_size < 1:
        raise InputError(f"batch_size must be >= 1, got {batch_size}")
    full_batch = batch_size >= len(retain_rows)
    order = retain_rows[rng.permutation(len(retain_rows))]
    cursor = 0
    for step in range(steps):
        if full_batch:
            batch = retain_rows
        else:
            if cursor + batch_size > len(order):
                order = retain_rows[rng.permutation(len(retain_rows))]
                cursor = 0
            batch = order[cursor:cursor + batch_size]
            cursor += batch_size
        loss, grads = backward(model, dataset.inputs[batch], dataset.labels[batch],
                               masked=not dense)
        if not np.isfinite(loss):
            raise NumericError(f"finetune diverged at step {step}")
        for w, b, gw, gb in zip(
            model.weights, model.biases, grads.weights, grads.biases
        ):
            w -= rate * gw
            b -= rate * gb
    return model


def unlearn(
    model: MaskedModel,
    split: DeletionSplit,
    dataset: Dataset,
    config: UnlearnConfig,
    rng: SeededRng,
    dense: bool = False,
) -> MaskedModel:
    """Dispatch to the configured method; deterministic under the given rng."""
    config.validate()
    if config.method == "noop":
        return model
    if config.method == "gradient_ascent":
        return unlearn_gradient_ascent(
            model, dataset, split.forget_indices, config.steps, config.rate, dense
        )
    if config.method == "fisher_forgetting":
        return unlearn_fisher_forgetting(
            model, split, dataset, config.fisher_noise_scale,
            rng.split("fisher-noise"), dense, config.fisher_on,
        )
    if config.method == "finetune":
        return unlearn_finetune(
            model, dataset, split.retain_indices, config.steps, config.rate,
            config.batch_size, rng.split("finetune-shuffle"), dense,
        )
    raise ConfigError(f"unknown unlearning method {config.method!r}")
