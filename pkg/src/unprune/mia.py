"""Membership-inference evaluation over five per-sample feature channels.

For each channel (correctness, confidence, entropy, modified entropy,
true-class probability) a threshold attacker is fit on a held-in half of the
member/non-member pool and scored on the held-out half with balanced attack
accuracy. Members are resampled to a requested member:non-member ratio,
which is the knob the fragility study sweeps: tiny ratio perturbations move
the fitted thresholds and the scores with them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InputError
from .model import MaskedModel, forward
from .numeric import SeededRng, round_count, softmax

CHANNELS = ("correctness", "confidence", "entropy", "m_entropy", "probability")

_CLIP = 1e-12


@dataclass(frozen=True)
class MIAReport:
    ratio: float
    correctness: float
    confidence: float
    entropy: float
    m_entropy: float
    probability: float
    n_member: int
    n_nonmember: int
    resampled_with_replacement: bool = False

    def score(self, channel: str) -> float:
        if channel not in CHANNELS:
            raise InputError(f"unknown MIA channel {channel!r}")
        return getattr(self, channel)


def mia_features(
    model: MaskedModel, dataset: Dataset, rows: np.ndarray
) -> dict[str, np.ndarray]:
    """Per-sample attack features.

    entropy   = -sum_k p_k log p_k
    m_entropy = -(1 - p_y) log p_y - sum_{k != y} p_k log(1 - p_k)
                (label-aware modified entropy; 0 for a confident correct hit)
    """
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        raise InputError("feature row set is empty")
    p = softmax(forward(model, dataset.inputs[rows]))
    y = dataset.labels[rows]
    idx = np.arange(len(rows))
    p_true = p[idx, y]
    log_p = np.log(np.maximum(p, _CLIP))
    log_1mp = np.log(np.maximum(1.0 - p, _CLIP))
    m_entropy = -(1.0 - p_true) * log_p[idx, y]
    m_entropy -= (p * log_1mp).sum(axis=1) - p_true * log_1mp[idx, y]
    return {
        "softmax": p,
        "correctness": (np.argmax(p, axis=1) == y).astype(np.float64),
        "confidence": p.max(axis=1),
        "entropy": -(p * log_p).sum(axis=1),
        "m_entropy": m_entropy,
        "probability": p_true,
    }


def _balanced_accuracy(member_pred: np.ndarray, nonmember_pred: np.ndarray) -> float:
    tpr = member_pred.mean()
    tnr = 1.0 - nonmember_pred.mean()
    return float((tpr + tnr) / 2.0)


def _fit_threshold(member_vals: np.ndarray, nonmember_vals: np.ndarray):
    """Pick (threshold, direction) maximizing balanced accuracy on the fit pool.

    direction +1 predicts member when value >= threshold, -1 when <=.
    Ties resolve to the lowest threshold with +1 preferred, so the fit is
    deterministic for identical inputs.
    """
    values = np.concatenate([member_vals, nonmember_vals])
    cuts = np.unique(values)
    candidates = np.concatenate([[cuts[0] - 1.0], (cuts[:-1] + cuts[1:]) / 2.0,
                                 [cuts[-1] + 1.0]])
    best = (-1.0, 0.0, 1)
    for threshold in candidates:
        for direction in (1, -1):
            if direction == 1:
                acc = _balanced_accuracy(
                    member_vals >= threshold, nonmember_vals >= threshold
                )
            else:
                acc = _balanced_accuracy(
                    member_vals <= threshold, nonmember_vals <= threshold
                )
            if acc > best[0] + 1e-15:
                best = (acc, float(threshold), direction)
    return best[1], best[2]


def _score_threshold(threshold, direction, member_vals, nonmember_vals) -> float:
    if direction == 1:
        return _balanced_accuracy(
            member_vals >= threshold, nonmember_vals >= threshold
        )
    return _balanced_accuracy(member_vals <= threshold, nonmember_vals <= threshold)


def _fit_logistic(member_vals: np.ndarray, nonmember_vals: np.ndarray,
                  steps: int = 200, lr: float = 0.5):
    """1-d logistic regression on a standardized channel (deterministic GD)."""
    x = np.concatenate([member_vals, nonmember_vals])
    y = np.concatenate([np.ones(len(member_vals)), np.zeros(len(nonmember_vals))])
    mu, sd = x.mean(), max(x.std(), 1e-12)
    z = (x - mu) / sd
    w, b = 0.0, 0.0
    for _ in range(steps):
        p = 1.0 / (1.0 + np.exp(-(w * z + b)))
        grad = p - y
        w -= lr * float((grad * z).mean())
        b -= lr * float(grad.mean())
    return mu, sd, w, b


def _score_logistic(params, member_vals, nonmember_vals) -> float:
    mu, sd, w, b = params
    member_pred = (w * (member_vals - mu) / sd + b) >= 0.0
    nonmember_pred = (w * (nonmember_vals - mu) / sd + b) >= 0.0
    return _balanced_accuracy(member_pred, nonmember_pred)


def mia_evaluate(
    model: MaskedModel,
    member_data: Dataset,
    member_rows: np.ndarray,
    nonmember_data: Dataset,
    nonmember_rows: np.ndarray,
    ratio: float,
    rng: SeededRng,
    attacker: str = "threshold",
) -> MIAReport:
    """Per-channel attack scores for one member:non-member ratio.

    Members (typically forgotten training rows) and non-members (typically
    held-out rows) may come from different datasets. Members are resampled
    to round(ratio * n_nonmember) rows (with replacement when the pool is
    too small, flagged in the report); each channel is fit on a held-in half
    and scored on the held-out half. The default attacker picks the best
    threshold per channel; ``attacker="logistic"`` fits a one-dimensional
    logistic regression instead.
    """
    if attacker not in ("threshold", "logistic"):
        raise InputError(f"unknown attacker {attacker!r}")
    member_rows = np.asarray(member_rows, dtype=np.int64)
    nonmember_rows = np.asarray(nonmember_rows, dtype=np.int64)
    if len(member_rows) == 0 or len(nonmember_rows) == 0:
        raise InputError("member and non-member row sets must be nonempty")
    if ratio <= 0:
        raise InputError(f"ratio must be > 0, got {ratio}")
    n_member = round_count(ratio * len(nonmember_rows))
    if n_member < 2 or len(nonmember_rows) < 2:
        raise InputError(
            "degenerate attack set: need at least 2 members and 2 non-members"
        )
    replace = n_member > len(member_rows)
    picked = member_rows[rng.choice(len(member_rows), n_member, replace=replace)]

    feats_m = mia_features(model, member_data, picked)
    feats_n = mia_features(model, nonmember_data, nonmember_rows)

    half_m = n_member // 2
    half_n = len(nonmember_rows) // 2
    order_m = rng.permutation(n_member)
    order_n = rng.permutation(len(nonmember_rows))

    scores = {}
    for channel in CHANNELS:
        vals_m = feats_m[channel][order_m]
        vals_n = feats_n[channel][order_n]
        if attacker == "threshold":
            threshold, direction = _fit_threshold(vals_m[:half_m], vals_n[:half_n])
            scores[channel] = _score_threshold(
                threshold, direction, vals_m[half_m:], vals_n[half_n:]
            )
        else:
            params = _fit_logistic(vals_m[:half_m], vals_n[:half_n])
            scores[channel] = _score_logistic(
                params, vals_m[half_m:], vals_n[half_n:]
            )
    return MIAReport(
        ratio=float(ratio),
        n_member=n_member,
        n_nonmember=len(nonmember_rows),
        resampled_with_replacement=replace,
        **scores,
    )


def ratio_sweep(
    model: MaskedModel,
    member_data: Dataset,
    member_rows: np.ndarray,
    nonmember_data: Dataset,
    nonmember_rows: np.ndarray,
    ratios: list[float],
    rng: SeededRng,
) -> list[MIAReport]:
    """One MIAReport per ratio: the fragility curve.

    Each sweep point derives its own stream from the ratio value, so equal
    ratios always reproduce identical reports regardless of position.
    """
    if not len(ratios):
        raise InputError("ratios must be nonempty")
    return [
        mia_evaluate(
            model, member_data, member_rows, nonmember_data, nonmember_rows,
            r, rng.split(f"ratio={float(r)!r}"),
        )
        for r in ratios
    ]


def sweep_to_csv(reports: list[MIAReport], path: str) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ratio"] + list(CHANNELS))
        for rep in reports:
            writer.writerow(
                [f"{rep.ratio:.10g}"] + [f"{rep.score(c):.10g}" for c in CHANNELS]
            )
