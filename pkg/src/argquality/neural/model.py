"""Regression heads and the three model variants (single-task, flat, hier).

Every head is a linear readout h . W + b.  The flat variant trains four heads
on the shared representation with summed losses; the hierarchical variant
feeds the three sub-dimension scores, concatenated onto the representation
(order: cogency, effectiveness, reasonableness), into an overall head of
input size H + 3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..corpus import ALL_DIMENSIONS, SUB_DIMENSIONS, ArgumentDoc, Dimension
from .encoders import (
    Encoder,
    MeanEmbeddingEncoder,
    PrecomputedEncoder,
    ProjectionEncoder,
)

CHECKPOINT_FORMAT_VERSION = 1

VARIANT_ST = "st"
VARIANT_FLAT = "flat"
VARIANT_HIER = "hier"


@dataclass
class Head:
    dimension: Dimension
    weights: np.ndarray
    bias: float = 0.0


def head_predict(h: Sequence[float] | np.ndarray, head: Head) -> float:
    """Linear readout dot(h, W) + b; the output real is not clamped."""
    h = np.asarray(h, dtype=float)
    if h.shape != head.weights.shape:
        raise ValueError(f"representation shape {h.shape} != head shape {head.weights.shape}")
    return float(h @ head.weights + head.bias)


def _head_batch(H: np.ndarray, head: Head) -> np.ndarray:
    if H.shape[1] != len(head.weights):
        raise ValueError(f"batch width {H.shape[1]} != head size {len(head.weights)}")
    return H @ head.weights + head.bias


def mse_loss(preds: Sequence[float], targets: Sequence[float]) -> float:
    """Mean squared error over a batch."""
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape:
        raise ValueError(f"{preds.shape} predictions against {targets.shape} targets")
    if preds.size == 0:
        raise ValueError("mse_loss of an empty batch")
    return float(((preds - targets) ** 2).mean())


def flat_loss(task_losses: Mapping[Dimension, float]) -> float:
    """Sum of the four per-dimension losses."""
    missing = [d.value for d in ALL_DIMENSIONS if d not in task_losses]
    if missing:
        raise ValueError(f"missing task losses for: {', '.join(missing)}")
    return float(sum(task_losses[d] for d in ALL_DIMENSIONS))


def hier_forward(
    h: Sequence[float] | np.ndarray,
    sub_heads: Mapping[Dimension, Head],
    overall_head: Head,
) -> dict[Dimension, float]:
    """Sub-scores from h, then overall from h ++ [cog, eff, rea]."""
    h = np.asarray(h, dtype=float)
    if set(sub_heads) != set(SUB_DIMENSIONS):
        raise ValueError("hier_forward needs exactly the three sub-dimension heads")
    scores = {dim: head_predict(h, sub_heads[dim]) for dim in SUB_DIMENSIONS}
    informed = np.concatenate([h, [scores[dim] for dim in SUB_DIMENSIONS]])
    scores[Dimension.OVERALL] = head_predict(informed, overall_head)
    return scores


@dataclass
class MtModel:
    """Encoder plus per-dimension heads for one of the three variants."""

    encoder: Encoder
    variant: str
    heads: dict[Dimension, Head] = field(default_factory=dict)
    st_dimension: Dimension | None = None

    def __post_init__(self) -> None:
        H = self.encoder.hidden_dim
        if self.variant == VARIANT_ST:
            if self.st_dimension is None or set(self.heads) != {self.st_dimension}:
                raise ValueError("single-task model needs exactly its one head")
            _expect_head_size(self.heads[self.st_dimension], H)
        elif self.variant == VARIANT_FLAT:
            if set(self.heads) != set(ALL_DIMENSIONS):
                raise ValueError("flat model needs all four heads")
            for head in self.heads.values():
                _expect_head_size(head, H)
        elif self.variant == VARIANT_HIER:
            if set(self.heads) != set(ALL_DIMENSIONS):
                raise ValueError("hier model needs all four heads")
            for dim in SUB_DIMENSIONS:
                _expect_head_size(self.heads[dim], H)
            _expect_head_size(self.heads[Dimension.OVERALL], H + 3)
        else:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def dimensions(self) -> tuple[Dimension, ...]:
        if self.variant == VARIANT_ST:
            return (self.st_dimension,)
        return ALL_DIMENSIONS

    def params(self) -> dict[str, np.ndarray]:
        out = dict(self.encoder.params())
        for dim in sorted(self.heads, key=lambda d: d.value):
            out[f"head.{dim.value}.weights"] = self.heads[dim].weights
            out[f"head.{dim.value}.bias"] = np.asarray([self.heads[dim].bias])
        return out

    def copy(self) -> "MtModel":
        return MtModel(
            encoder=self.encoder.copy(),
            variant=self.variant,
            heads={
                dim: Head(dim, head.weights.copy(), head.bias) for dim, head in self.heads.items()
            },
            st_dimension=self.st_dimension,
        )


def _expect_head_size(head: Head, size: int) -> None:
    if head.weights.shape != (size,):
        raise ValueError(f"head for {head.dimension.value} has shape {head.weights.shape}, expected ({size},)")


def new_model(
    encoder: Encoder, variant: str, st_dimension: Dimension | None = None
) -> MtModel:
    """Fresh model with zero-initialized heads (head-only training is convex)."""
    H = encoder.hidden_dim
    if variant == VARIANT_ST:
        if st_dimension is None:
            raise ValueError("single-task model needs a dimension")
        heads = {st_dimension: Head(st_dimension, np.zeros(H))}
    elif variant == VARIANT_FLAT:
        heads = {dim: Head(dim, np.zeros(H)) for dim in ALL_DIMENSIONS}
    elif variant == VARIANT_HIER:
        heads = {dim: Head(dim, np.zeros(H)) for dim in SUB_DIMENSIONS}
        heads[Dimension.OVERALL] = Head(Dimension.OVERALL, np.zeros(H + 3))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return MtModel(encoder=encoder, variant=variant, heads=heads, st_dimension=st_dimension)


def forward_batch(model: MtModel, H: np.ndarray) -> dict[Dimension, np.ndarray]:
    """Predictions per dimension for a batch of hidden representations."""
    if model.variant == VARIANT_HIER:
        subs = {dim: _head_batch(H, model.heads[dim]) for dim in SUB_DIMENSIONS}
        informed = np.column_stack([H] + [subs[dim] for dim in SUB_DIMENSIONS])
        preds = dict(subs)
        preds[Dimension.OVERALL] = _head_batch(informed, model.heads[Dimension.OVERALL])
        return preds
    return {dim: _head_batch(H, model.heads[dim]) for dim in model.dimensions}


def predict_all(
    model: MtModel,
    docs: Sequence[ArgumentDoc],
    clamp: tuple[float, float] | None = None,
) -> dict[str, dict[Dimension, float]]:
    """Scores for every document; optionally clamped to a scale hull.

    Raises :class:`MissingRepresentationError` when the encoder has no input
    for a document.
    """
    if not docs:
        return {}
    X = np.stack([model.encoder.doc_vector(doc) for doc in docs])
    preds = forward_batch(model, model.encoder.encode(X))
    if clamp is not None:
        lo, hi = clamp
        preds = {dim: np.clip(values, lo, hi) for dim, values in preds.items()}
    return {
        doc.id: {dim: float(preds[dim][row]) for dim in preds}
        for row, doc in enumerate(docs)
    }


def save_checkpoint(model: MtModel, path: str | Path, train_config: dict | None = None) -> None:
    payload: dict = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": "mt_model",
        "variant": model.variant,
        "st_dimension": model.st_dimension.value if model.st_dimension else None,
        "encoder": _encoder_to_dict(model.encoder),
        "heads": {
            dim.value: {"weights": [float(w) for w in head.weights], "bias": float(head.bias)}
            for dim, head in sorted(model.heads.items(), key=lambda kv: kv[0].value)
        },
    }
    if train_config is not None:
        payload["train_config"] = train_config
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def _encoder_to_dict(encoder: Encoder) -> dict:
    if isinstance(encoder, ProjectionEncoder):
        return {
            "type": encoder.kind,
            "hidden_dim": encoder.hidden_dim,
            "input_dim": encoder.input_dim,
            "base": {"type": encoder.base.kind},
            "weights": [[float(v) for v in row] for row in encoder.weights],
            "offset": [float(v) for v in encoder.offset],
        }
    return {"type": encoder.kind, "hidden_dim": encoder.hidden_dim, "input_dim": encoder.input_dim}


def load_checkpoint(
    path: str | Path,
    base_encoder: MeanEmbeddingEncoder | PrecomputedEncoder,
) -> MtModel:
    """Rebuild a model; the frozen encoder inputs come from ``base_encoder``.

    Embedding tables and precomputed-vector files are deliberately not stored
    inside checkpoints, so the caller supplies the matching base encoder.
    """
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "mt_model" or payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{CHECKPOINT_FORMAT_VERSION} model checkpoint")
    spec = payload["encoder"]
    if spec["type"] == "projection":
        encoder: Encoder = ProjectionEncoder(
            base_encoder,
            hidden_dim=spec["hidden_dim"],
            weights=np.asarray(spec["weights"], dtype=float),
            offset=np.asarray(spec["offset"], dtype=float),
        )
    else:
        if base_encoder.kind != spec["type"]:
            raise ValueError(
                f"checkpoint wants a {spec['type']} encoder, got {base_encoder.kind}"
            )
        encoder = base_encoder
    if encoder.hidden_dim != spec["hidden_dim"]:
        raise ValueError(
            f"encoder hidden size {encoder.hidden_dim} != checkpoint {spec['hidden_dim']}"
        )
    heads = {}
    for dim_value, data in payload["heads"].items():
        dim = Dimension(dim_value)
        heads[dim] = Head(dim, np.asarray(data["weights"], dtype=float), float(data["bias"]))
    st_dimension = Dimension(payload["st_dimension"]) if payload.get("st_dimension") else None
    return MtModel(encoder=encoder, variant=payload["variant"], heads=heads, st_dimension=st_dimension)
