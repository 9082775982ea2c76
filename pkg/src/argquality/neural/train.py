"""Deterministic mini-batch training, gradient checking, and encoder transfer.

All gradients are hand-derived and verified against central finite
differences (see ``grad_check``).  Training is bit-reproducible for a fixed
seed: examples are sorted by document id before the seeded shuffle, heads
start at zero, and the projection encoder is seeded explicitly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..corpus import SUB_DIMENSIONS, ArgumentDoc, Dimension
from ..metrics import pearson
from .encoders import Encoder
from .model import (
    VARIANT_FLAT,
    VARIANT_HIER,
    MtModel,
    forward_batch,
    new_model,
)


class TrainingDivergedError(RuntimeError):
    """Raised when a batch loss becomes NaN or infinite."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 16
    optimizer: str = "adam"      # "adam" | "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    #: Hier only: train all heads jointly for this many epochs, then freeze
    #: the three sub-heads.  None trains jointly throughout.
    hier_warm_epochs: int | None = None
    #: Search space for learning_rate/epochs; consumed by grid search, not by
    #: a single training run.
    grid: dict | None = None

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainData:
    ids: list[str]
    X: np.ndarray                      # (n, input_dim) encoder inputs
    targets: dict[Dimension, np.ndarray]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class HistoryRow:
    epoch: int
    split: str
    dimension: str
    metric: str
    value: float | None


def build_training_data(
    docs: Sequence[ArgumentDoc],
    encoder: Encoder,
    scores: Mapping[str, Mapping[Dimension, float]],
    dimensions: Sequence[Dimension],
) -> TrainData:
    """Assemble encoder inputs and targets, sorted by document id.

    Sorting first makes the training shuffle a function of (ids, seed) only,
    so file order never affects results.
    """
    ordered = sorted(docs, key=lambda d: d.id)
    ids, rows = [], []
    targets: dict[Dimension, list[float]] = {dim: [] for dim in dimensions}
    for doc in ordered:
        if doc.id not in scores:
            raise ValueError(f"no reference scores for doc {doc.id!r}")
        doc_scores = scores[doc.id]
        for dim in dimensions:
            if dim not in doc_scores:
                raise ValueError(f"doc {doc.id!r} lacks a {dim.value} score")
        ids.append(doc.id)
        rows.append(encoder.doc_vector(doc))
        for dim in dimensions:
            targets[dim].append(float(doc_scores[dim]))
    if not ids:
        raise ValueError("no training documents")
    return TrainData(
        ids=ids,
        X=np.stack(rows),
        targets={dim: np.asarray(vals) for dim, vals in targets.items()},
    )


def _loss_and_grads(
    model: MtModel, X: np.ndarray, targets: Mapping[Dimension, np.ndarray]
) -> tuple[float, dict[Dimension, float], dict[str, np.ndarray]]:
    """Variant loss, per-task losses, and gradients for one batch."""
    k = X.shape[0]
    hidden, cache = model.encoder.encode_with_cache(X)
    preds = forward_batch(model, hidden)

    task_losses = {
        dim: float(((preds[dim] - targets[dim]) ** 2).mean()) for dim in model.dimensions
    }
    total = float(sum(task_losses.values()))

    grads: dict[str, np.ndarray] = {}
    d_hidden = np.zeros_like(hidden)
    if model.variant == VARIANT_HIER:
        overall = model.heads[Dimension.OVERALL]
        H = hidden.shape[1]
        g_overall = 2.0 / k * (preds[Dimension.OVERALL] - targets[Dimension.OVERALL])
        grads["head.overall.weights"] = np.concatenate(
            [
                hidden.T @ g_overall,
                [preds[dim] @ g_overall for dim in SUB_DIMENSIONS],
            ]
        )
        grads["head.overall.bias"] = np.asarray([g_overall.sum()])
        d_hidden += np.outer(g_overall, overall.weights[:H])
        for offset, dim in enumerate(SUB_DIMENSIONS):
            # Direct MSE term plus the flow through the concatenated score.
            g_sub = 2.0 / k * (preds[dim] - targets[dim]) + g_overall * overall.weights[H + offset]
            grads[f"head.{dim.value}.weights"] = hidden.T @ g_sub
            grads[f"head.{dim.value}.bias"] = np.asarray([g_sub.sum()])
            d_hidden += np.outer(g_sub, model.heads[dim].weights)
    else:
        for dim in model.dimensions:
            g = 2.0 / k * (preds[dim] - targets[dim])
            grads[f"head.{dim.value}.weights"] = hidden.T @ g
            grads[f"head.{dim.value}.bias"] = np.asarray([g.sum()])
            d_hidden += np.outer(g, model.heads[dim].weights)

    grads.update(model.encoder.backprop(cache, d_hidden))
    return total, task_losses, grads


def batch_loss(model: MtModel, X: np.ndarray, targets: Mapping[Dimension, np.ndarray]) -> float:
    loss, _, _ = _loss_and_grads(model, X, targets)
    return loss


class _Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, key: str, grad: np.ndarray) -> np.ndarray:
        return self.lr * grad


class _Adam:
    def __init__(self, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t: dict[str, int] = {}

    def step(self, key: str, grad: np.ndarray) -> np.ndarray:
        m = self.m.get(key)
        if m is None:
            m = np.zeros_like(grad)
            self.v[key] = np.zeros_like(grad)
            self.t[key] = 0
        v = self.v[key]
        self.t[key] += 1
        t = self.t[key]
        m = self.beta1 * m + (1 - self.beta1) * grad
        v = self.beta2 * v + (1 - self.beta2) * grad**2
        self.m[key], self.v[key] = m, v
        m_hat = m / (1 - self.beta1**t)
        v_hat = v / (1 - self.beta2**t)
        return self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _apply_delta(model: MtModel, key: str, delta: np.ndarray) -> None:
    if key.startswith("encoder."):
        # params() hands out the live arrays; -= mutates them in place
        model.encoder.params()[key] -= delta
        return
    _, dim_value, which = key.split(".")
    head = model.heads[Dimension(dim_value)]
    if which == "weights":
        head.weights -= delta
    else:
        head.bias -= float(delta[0])


def train(
    model: MtModel,
    train_data: TrainData,
    dev_data: TrainData | None,
    config: TrainConfig,
) -> tuple[MtModel, list[HistoryRow]]:
    """Mini-batch training of the variant loss; returns a trained copy.

    The input model is left untouched.  History carries per-epoch full-pass
    train losses per dimension (metric ``mse``, plus ``loss`` for the total)
    and dev Pearson per dimension when dev data is given.
    """
    config.validate()
    if len(train_data) == 0:
        raise ValueError("empty training set")
    for dim in model.dimensions:
        if dim not in train_data.targets:
            raise ValueError(f"training data lacks targets for {dim.value}")

    model = model.copy()
    if config.optimizer == "sgd":
        optimizer = _Sgd(config.learning_rate)
    else:
        optimizer = _Adam(config.learning_rate, config.beta1, config.beta2, config.adam_eps)

    rng = np.random.default_rng(config.seed)
    n = len(train_data)
    history: list[HistoryRow] = []
    for epoch in range(1, config.epochs + 1):
        frozen: set[str] = set()
        if (
            model.variant == VARIANT_HIER
            and config.hier_warm_epochs is not None
            and epoch > config.hier_warm_epochs
        ):
            frozen = {
                f"head.{dim.value}.{which}"
                for dim in SUB_DIMENSIONS
                for which in ("weights", "bias")
            }
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = perm[start : start + config.batch_size]
            Xb = train_data.X[rows]
            tb = {dim: train_data.targets[dim][rows] for dim in model.dimensions}
            loss, _, grads = _loss_and_grads(model, Xb, tb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss!r} at epoch {epoch}, batch starting at {start}"
                )
            for key in sorted(grads):
                if key in frozen:
                    continue
                _apply_delta(model, key, optimizer.step(key, grads[key]))

        total, task_losses, _ = _loss_and_grads(model, train_data.X, train_data.targets)
        for dim in model.dimensions:
            history.append(HistoryRow(epoch, "train", dim.value, "mse", task_losses[dim]))
        history.append(HistoryRow(epoch, "train", "all", "loss", total))
        if dev_data is not None and len(dev_data) > 0:
            preds = forward_batch(model, model.encoder.encode(dev_data.X))
            for dim in model.dimensions:
                r = None
                if dim in dev_data.targets and len(dev_data.targets[dim]) >= 2:
                    r = pearson(preds[dim], dev_data.targets[dim])
                history.append(HistoryRow(epoch, "dev", dim.value, "pearson", r))
    return model, history


def write_history_csv(rows: Sequence[HistoryRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "dimension", "metric", "value"])
        for row in rows:
            value = "NA" if row.value is None else repr(row.value)
            writer.writerow([row.epoch, row.split, row.dimension, row.metric, value])


def _perturb(model: MtModel, key: str, flat_index: int, delta: float) -> None:
    if key.startswith("encoder."):
        array = model.encoder.params()[key]
        array[np.unravel_index(flat_index, array.shape)] += delta
        return
    _, dim_value, which = key.split(".")
    head = model.heads[Dimension(dim_value)]
    if which == "weights":
        head.weights[flat_index] += delta
    else:
        head.bias += delta


def grad_check(
    model: MtModel,
    X: np.ndarray,
    targets: Mapping[Dimension, np.ndarray],
    fd_eps: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per parameter is |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|),
    maximized over every trainable scalar.
    """
    if X.shape[0] == 0:
        raise ValueError("grad_check needs a non-empty batch")
    work = model.copy()
    _, _, grads = _loss_and_grads(work, X, targets)
    worst = 0.0
    for key in sorted(grads):
        flat = grads[key].ravel()
        for index in range(flat.size):
            _perturb(work, key, index, +fd_eps)
            plus = batch_loss(work, X, targets)
            _perturb(work, key, index, -2 * fd_eps)
            minus = batch_loss(work, X, targets)
            _perturb(work, key, index, +fd_eps)
            fd = (plus - minus) / (2 * fd_eps)
            ga = float(flat[index])
            worst = max(worst, abs(ga - fd) / max(1e-8, abs(ga) + abs(fd)))
    return worst


def stilt_transfer(
    source_model: MtModel,
    target_train: TrainData,
    target_dev: TrainData | None,
    config: TrainConfig,
    variant: str = VARIANT_FLAT,
    st_dimension: Dimension | None = None,
) -> tuple[MtModel, list[HistoryRow]]:
    """Continue training from the source encoder on the target task.

    The source encoder parameters are copied, heads start fresh, and the
    target model trains as the requested variant.  A frozen source encoder
    has nothing to transfer, so the result then equals training from scratch
    (a warning says so).
    """
    encoder = source_model.encoder.copy()
    if target_train.X.shape[1] != encoder.input_dim:
        raise ValueError(
            f"target inputs have width {target_train.X.shape[1]}, encoder expects {encoder.input_dim}"
        )
    if not encoder.trainable:
        warnings.warn(
            "source encoder has no trainable parameters; transfer equals training from scratch",
            stacklevel=2,
        )
    target = new_model(encoder, variant, st_dimension)
    return train(target, target_train, target_dev, config)
