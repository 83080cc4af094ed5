"""Seeded numeric primitives every other module builds on.

All tensors are plain numpy float64 arrays in row-major order. Randomness
goes through ``SeededRng``, a counter-based (Philox) stream that can be
split into independent named sub-streams, so that e.g. the deletion split,
the weight init and the scrubbing noise never share state.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import InputError, NumericError, ShapeError


def round_count(x: float) -> int:
    """Round half up; used for every 'round(fraction * N)' count in the package."""
    return int(np.floor(x + 0.5))


class SeededRng:
    """Deterministic random stream keyed by (seed, stream id).

    Identical (seed, stream) pairs produce bit-identical draw sequences.
    ``split(label)`` derives an independent child stream from a string
    label; the derivation is a pure hash, so split order does not matter.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def split(self, label: str) -> "SeededRng":
        digest = hashlib.blake2b(
            f"{self.stream}/{label}".encode("utf-8"), digest_size=8
        ).digest()
        return SeededRng(self.seed, int.from_bytes(digest, "little"))

    def normal(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        if std < 0:
            raise InputError(f"std must be >= 0, got {std}")
        return self._gen.normal(loc=mean, scale=std, size=int(n)).astype(np.float64)

    def uniform(self, low: float, high: float, n: int) -> np.ndarray:
        return self._gen.uniform(low, high, size=int(n)).astype(np.float64)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(int(n))

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(int(n), size=int(size), replace=replace)

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        return self._gen.integers(low, high, size=int(size))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def rng_normal(rng: SeededRng, n: int, mean: float, std: float) -> np.ndarray:
    """n draws from N(mean, std^2); std=0 degenerates to a constant vector."""
    return rng.normal(n, mean, std)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of two 2-d float64 arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} x {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    if not np.all(np.isfinite(out)):
        raise NumericError("matmul produced non-finite values")
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean negative log softmax probability of the true class.

    Returns (loss, grad_logits) with grad = (softmax - onehot) / batch, the
    gradient of the mean loss with respect to the logits.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be 2-d, got shape {logits.shape}")
    b, c = logits.shape
    if labels.shape != (b,):
        raise ShapeError(f"labels must have shape ({b},), got {labels.shape}")
    if b < 1:
        raise InputError("batch must contain at least one sample")
    if labels.min() < 0 or labels.max() >= c:
        raise InputError(f"labels must lie in [0, {c}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    p = softmax(logits)
    rows = np.arange(b)
    loss = float(-np.log(np.maximum(p[rows, labels], 1e-300)).mean())
    if not np.isfinite(loss):
        raise NumericError("cross-entropy loss is non-finite")
    grad = p.copy()
    grad[rows, labels] -= 1.0
    grad /= b
    return loss, grad
