"""Plain SGD on the masked loss, plus accuracy evaluation.

No momentum, no weight decay, no schedules: the simplest optimizer keeps
seed-for-seed comparisons between runs interpretable. Masks are re-applied
after every step, so training never changes the topology.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError, NumericError
from .model import MaskedModel, apply_mask, backward, forward
from .numeric import SeededRng, softmax_cross_entropy


@dataclass(frozen=True)
class TrainCfg:
    epochs: int = 200
    lr: float = 0.1
    batch_size: int = 64


@dataclass
class TrainLog:
    rows: list[tuple[int, str, float, float]] = field(default_factory=list)

    def record(self, epoch: int, split: str, loss: float, accuracy: float) -> None:
        self.rows.append((epoch, split, float(loss), float(accuracy)))

    def final_loss(self) -> float:
        return self.rows[-1][2]

    def final_accuracy(self) -> float:
        return self.rows[-1][3]

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "split", "loss", "accuracy"])
            for epoch, split, loss, acc in self.rows:
                writer.writerow([epoch, split, f"{loss:.10g}", f"{acc:.10g}"])


def train_sgd(
    model: MaskedModel,
    dataset: Dataset,
    indices: np.ndarray,
    epochs: int,
    lr: float,
    batch_size: int,
    rng: SeededRng,
) -> TrainLog:
    """Minibatch SGD over the given rows; mutates the model in place.

    Shuffling is seeded, the mask is re-applied after every step, and a
    non-finite epoch loss aborts with an error naming the epoch.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if len(indices) == 0:
        raise InputError("training index set is empty")
    if lr < 0:
        raise InputError(f"lr must be >= 0, got {lr}")
    if batch_size < 1:
        raise InputError(f"batch_size must be >= 1, got {batch_size}")
    log = TrainLog()
    for epoch in range(epochs):
        try:
            order = indices[rng.permutation(len(indices))]
            for start in range(0, len(order), batch_size):
                batch = order[start:start + batch_size]
                _, grads = backward(
                    model, dataset.inputs[batch], dataset.labels[batch]
                )
                for w, b, gw, gb in zip(
                    model.weights, model.biases, grads.weights, grads.biases
                ):
                    w -= lr * gw
                    b -= lr * gb
                apply_mask(model)
            loss, acc = evaluate(model, dataset, indices)
        except NumericError as exc:
            raise NumericError(f"training diverged at epoch {epoch}: {exc}") from exc
        if not np.isfinite(loss):
            raise NumericError(f"training diverged at epoch {epoch}")
        log.record(epoch, "train", loss, acc)
    return log


def train_with_cfg(
    model: MaskedModel,
    dataset: Dataset,
    indices: np.ndarray,
    cfg: TrainCfg,
    rng: SeededRng,
) -> TrainLog:
    return train_sgd(model, dataset, indices, cfg.epochs, cfg.lr, cfg.batch_size, rng)


def evaluate(
    model: MaskedModel, dataset: Dataset, indices: np.ndarray
) -> tuple[float, float]:
    """(mean loss, argmax accuracy) over the given rows; ties pick class 0 first."""
    indices = np.asarray(indices, dtype=np.int64)
    if len(indices) == 0:
        raise InputError("evaluation index set is empty")
    logits = forward(model, dataset.inputs[indices])
    labels = dataset.labels[indices]
    loss, _ = softmax_cross_entropy(logits, labels)
    predictions = np.argmax(logits, axis=1)
    accuracy = float((predictions == labels).mean())
    return loss, accuracy
