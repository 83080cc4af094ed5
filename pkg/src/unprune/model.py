"""Masked multilayer perceptron: weights, binary masks, and the saved init.

The effective parameters at inference are always weights * masks. Gradients
of the masked loss are taken with respect to the raw weights, so a masked-out
weight receives exactly zero gradient (the chain rule through the elementwise
product) -- which is precisely why plain unlearning cannot move a pruned
topology and re-initialization is needed first.

Biases are never masked; sparsity accounting covers weight entries only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InputError, ShapeError
from .numeric import SeededRng, matmul, softmax_cross_entropy

ACTIVATIONS = ("relu", "none")

SNAPSHOT_MAGIC = "unprune-model 1"
_HEADER_END = b"end-header\n"


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise InputError(f"layer dims must be positive, got {self}")
        if self.activation not in ACTIVATIONS:
            raise InputError(f"unknown activation {self.activation!r}")


def mlp_specs(dims: list[int]) -> list[LayerSpec]:
    """Fully connected specs from a dim chain like [2, 64, 32, 2].

    All layers use relu except the last, which emits raw logits.
    """
    if len(dims) < 2:
        raise InputError("need at least an input and an output dimension")
    specs = []
    for i in range(len(dims) - 1):
        act = "none" if i == len(dims) - 2 else "relu"
        specs.append(LayerSpec(dims[i], dims[i + 1], act))
    return specs


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class MaskedModel:
    layers: list[LayerSpec]
    weights: list[np.ndarray]        # per layer, (out, in)
    biases: list[np.ndarray]         # per layer, (out,)
    masks: list[np.ndarray]          # per layer, (out, in), entries in {0, 1}
    init_snapshot: list[np.ndarray]  # per layer, (out, in); weights at init
    seed: int

    @property
    def num_weights(self) -> int:
        return sum(w.size for w in self.weights)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].in_dim] + [s.out_dim for s in self.layers]

    def clone(self) -> "MaskedModel":
        return MaskedModel(
            layers=list(self.layers),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            masks=[m.copy() for m in self.masks],
            init_snapshot=[s.copy() for s in self.init_snapshot],
            seed=self.seed,
        )

    def flat_masks(self) -> np.ndarray:
        return np.concatenate([m.ravel() for m in self.masks])

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights])


def init_model(specs: list[LayerSpec], rng: SeededRng) -> MaskedModel:
    """Kaiming-uniform weights, zero biases, all-ones masks, snapshotted init.

    Weight bound is 1/sqrt(fan_in), the standard linear-layer default
    (kaiming-uniform with a=sqrt(5)).
    """
    if not specs:
        raise InputError("need at least one layer")
    for a, b in zip(specs, specs[1:]):
        if a.out_dim != b.in_dim:
            raise InputError(f"dim chain mismatch: {a.out_dim} -> {b.in_dim}")
    if specs[-1].activation != "none":
        raise InputError("last layer must emit raw logits (activation 'none')")
    weights, biases, masks = [], [], []
    for i, spec in enumerate(specs):
        bound = 1.0 / np.sqrt(spec.in_dim)
        w = rng.split(f"layer{i}").uniform(-bound, bound, spec.out_dim * spec.in_dim)
        weights.append(w.reshape(spec.out_dim, spec.in_dim))
        biases.append(np.zeros(spec.out_dim, dtype=np.float64))
        masks.append(np.ones((spec.out_dim, spec.in_dim), dtype=np.float64))
    return MaskedModel(
        layers=list(specs),
        weights=weights,
        biases=biases,
        masks=masks,
        init_snapshot=[w.copy() for w in weights],
        seed=rng.seed,
    )


def _forward_trace(
    model: MaskedModel, inputs: np.ndarray, masked: bool
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Returns (per-layer activations incl. input, per-layer pre-activations)."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layers[0].in_dim:
        raise ShapeError(
            f"inputs must be (batch, {model.layers[0].in_dim}), got {x.shape}"
        )
    acts = [x]
    pre = []
    for spec, w, b, m in zip(model.layers, model.weights, model.biases, model.masks):
        w_eff = w * m if masked else w
        z = matmul(acts[-1], w_eff.T) + b
        pre.append(z)
        acts.append(np.maximum(z, 0.0) if spec.activation == "relu" else z)
    return acts, pre


def forward(model: MaskedModel, inputs: np.ndarray, masked: bool = True) -> np.ndarray:
    """Logits of the (masked) model for a batch of inputs."""
    acts, _ = _forward_trace(model, inputs, masked)
    return acts[-1]


def backward(
    model: MaskedModel,
    inputs: np.ndarray,
    labels: np.ndarray,
    masked: bool = True,
) -> tuple[float, GradientSet]:
    """Mean cross-entropy loss and its gradient w.r.t. raw weights and biases.

    With ``masked=True`` the gradient of every masked-out weight is exactly 0.
    ``masked=False`` treats the model as dense (mask ignored in both passes).
    """
    acts, pre = _forward_trace(model, inputs, masked)
    loss, delta = softmax_cross_entropy(acts[-1], labels)
    g_w = [None] * len(model.layers)
    g_b = [None] * len(model.layers)
    for l in range(len(model.layers) - 1, -1, -1):
        g_eff = matmul(delta.T, acts[l])
        g_w[l] = g_eff * model.masks[l] if masked else g_eff
        g_b[l] = delta.sum(axis=0)
        if l > 0:
            w_eff = model.weights[l] * model.masks[l] if masked else model.weights[l]
            delta = matmul(delta, w_eff)
            if model.layers[l - 1].activation == "relu":
                delta = delta * (pre[l - 1] > 0.0)
    return loss, GradientSet(weights=g_w, biases=g_b)


def apply_mask(model: MaskedModel) -> MaskedModel:
    """Hard-zero the weights at masked positions, in place."""
    for w, m in zip(model.weights, model.masks):
        w *= m
    return model


def save_snapshot(model: MaskedModel, path: str) -> None:
    """Write the documented snapshot format: text header + raw float64 blocks.

    Header lines are ``key=value``; blocks follow ``end-header`` in layer
    order, little-endian float64, one weights/bias/mask/init quadruple per
    layer (weights and init row-major).
    """
    from .prune import sparsity_of  # local import to avoid a cycle

    header = [
        SNAPSHOT_MAGIC,
        f"seed={model.seed}",
        "dims=" + ",".join(str(d) for d in model.dims),
        "activations=" + ",".join(s.activation for s in model.layers),
        f"sparsity={sparsity_of(model).sparsity:.6f}",
        "blocks=weights,bias,mask,init per layer; float64 little-endian",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(_HEADER_END)
        for w, b, m, s in zip(
            model.weights, model.biases, model.masks, model.init_snapshot
        ):
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())
            fh.write(m.astype("<f8").tobytes())
            fh.write(s.astype("<f8").tobytes())


def load_snapshot(path: str) -> MaskedModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.find(_HEADER_END)
    if end < 0:
        raise FormatError(f"{path}: missing end-header marker")
    lines = raw[:end].decode("ascii").splitlines()
    if not lines or lines[0] != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: bad snapshot magic line")
    fields = dict(line.split("=", 1) for line in lines[1:] if "=" in line)
    dims = [int(d) for d in fields["dims"].split(",")]
    activations = fields["activations"].split(",")
    seed = int(fields["seed"])
    specs = [
        LayerSpec(dims[i], dims[i + 1], activations[i]) for i in range(len(dims) - 1)
    ]
    blob = raw[end + len(_HEADER_END):]
    offset = 0
    weights, biases, masks, snap = [], [], [], []

    def take(count, shape):
        nonlocal offset
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise FormatError(f"{path}: truncated block at byte {offset}")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += nbytes
        return arr.reshape(shape).copy()

    for spec in specs:
        weights.append(take(spec.out_dim * spec.in_dim, (spec.out_dim, spec.in_dim)))
        biases.append(take(spec.out_dim, (spec.out_dim,)))
        masks.append(take(spec.out_dim * spec.in_dim, (spec.out_dim, spec.in_dim)))
        snap.append(take(spec.out_dim * spec.in_dim, (spec.out_dim, spec.in_dim)))
    return MaskedModel(
        layers=specs,
        weights=weights,
        biases=biases,
        masks=masks,
        init_snapshot=snap,
        seed=seed,
    )
