"""Mask production: magnitude pruning, structured l2 pruning, accounting.

Tie-breaking is deterministic everywhere: equal scores are resolved toward
the lowest flat weight index (or lowest neuron index), via stable sorts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import MaskedModel, apply_mask
from .numeric import round_count


@dataclass(frozen=True)
class LayerSparsity:
    layer: int
    total: int
    zeros: int

    @property
    def sparsity(self) -> float:
        return self.zeros / self.total


@dataclass(frozen=True)
class SparsityReport:
    total_weights: int
    zero_mask_entries: int
    per_layer: tuple[LayerSparsity, ...]

    @property
    def sparsity(self) -> float:
        return self.zero_mask_entries / self.total_weights


def sparsity_of(model: MaskedModel) -> SparsityReport:
    """Exact zero counts over weight mask entries (biases excluded)."""
    per_layer = []
    for i, m in enumerate(model.masks):
        per_layer.append(LayerSparsity(i, m.size, int(m.size - m.sum())))
    return SparsityReport(
        total_weights=sum(p.total for p in per_layer),
        zero_mask_entries=sum(p.zeros for p in per_layer),
        per_layer=tuple(per_layer),
    )


def _prune_flat(weights: np.ndarray, mask: np.ndarray, target_zeros: int) -> None:
    """Zero additional smallest-|weight| unmasked entries until target_zeros."""
    current = int(mask.size - mask.sum())
    need = target_zeros - current
    if need == 0:
        return
    candidates = np.flatnonzero(mask == 1.0)
    # Stable sort on magnitude: equal magnitudes fall in flat-index order.
    order = candidates[np.argsort(np.abs(weights[candidates]), kind="stable")]
    victims = order[:need]
    mask[victims] = 0.0
    weights[victims] = 0.0


def prune_magnitude(
    model: MaskedModel, target_sparsity: float, scope: str = "global"
) -> MaskedModel:
    """Mask the smallest-magnitude surviving weights down to target sparsity.

    ``global`` ranks magnitudes across all layers; ``per_layer`` applies the
    target to each layer's own weight count. Counts use round-half-up, so the
    final zero count is exactly round(target * N).
    """
    if scope not in ("global", "per_layer"):
        raise InputError(f"unknown prune scope {scope!r}")
    if not 0.0 <= target_sparsity < 1.0:
        raise InputError(f"target sparsity must lie in [0, 1), got {target_sparsity}")
    report = sparsity_of(model)
    if scope == "global":
        target_zeros = round_count(target_sparsity * report.total_weights)
        if target_zeros < report.zero_mask_entries:
            raise InputError(
                f"target sparsity {target_sparsity} is below current "
                f"{report.sparsity:.6f}"
            )
        flat_w = model.flat_weights()
        flat_m = model.flat_masks()
        _prune_flat(flat_w, flat_m, target_zeros)
        offset = 0
        for w, m in zip(model.weights, model.masks):
            w[...] = flat_w[offset:offset + w.size].reshape(w.shape)
            m[...] = flat_m[offset:offset + m.size].reshape(m.shape)
            offset += w.size
    else:
        for i, (w, m) in enumerate(zip(model.weights, model.masks)):
            target_zeros = round_count(target_sparsity * m.size)
            current = int(m.size - m.sum())
            if target_zeros < current:
                raise InputError(
                    f"layer {i}: target sparsity {target_sparsity} is below "
                    f"current {current / m.size:.6f}"
                )
            flat_w = w.ravel()
            flat_m = m.ravel()
            _prune_flat(flat_w, flat_m, target_zeros)
            w[...] = flat_w.reshape(w.shape)
            m[...] = flat_m.reshape(m.shape)
    return apply_mask(model)


def hidden_layer_indices(model: MaskedModel) -> list[int]:
    """Layers whose output units are hidden neurons (all but the last)."""
    return list(range(len(model.layers) - 1))


def prune_structured_l2(model: MaskedModel, prune_fraction: float) -> MaskedModel:
    """Mask whole hidden neurons with the smallest incoming-row l2 norm.

    Per hidden layer, floor(fraction * units) rows are zeroed entirely (mask,
    weights and the neuron's bias). Already-pruned rows have zero norm and are
    therefore re-selected first, which makes the operation monotone.
    """
    if not 0.0 < prune_fraction < 1.0:
        raise InputError(f"prune fraction must lie in (0, 1), got {prune_fraction}")
    hidden = hidden_layer_indices(model)
    if not hidden:
        raise InputError("model has no hidden layers to prune")
    for l in hidden:
        units = model.layers[l].out_dim
        k = int(np.floor(prune_fraction * units))
        if k == 0:
            continue
        if k >= units:
            raise InputError(f"layer {l}: pruning would leave zero active neurons")
        norms = np.sqrt((model.weights[l] ** 2).sum(axis=1))
        victims = np.argsort(norms, kind="stable")[:k]
        model.masks[l][victims, :] = 0.0
        model.weights[l][victims, :] = 0.0
        model.biases[l][victims] = 0.0
    return model


def neuron_mask(model: MaskedModel) -> np.ndarray:
    """Per-hidden-neuron activity vector: 1 if any incoming mask entry is 1."""
    parts = [
        (model.masks[l].sum(axis=1) > 0).astype(np.float64)
        for l in hidden_layer_indices(model)
    ]
    if not parts:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate(parts)
