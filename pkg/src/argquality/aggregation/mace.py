"""EM estimation of annotator competence and latent true labels.

Generative story per rating: item i has a latent true label T_i (uniform
prior over the k labels); annotator j spams with probability 1 - theta_j.
A non-spammed rating copies T_i; a spammed rating is drawn from the
annotator's spam distribution xi_j, independently of T_i.

EM runs from several random initializations; the restart with the best data
log-likelihood wins (ties go to the lower restart index).  Smoothing is
applied as pseudo-counts in the M-step, which keeps every competence strictly
inside (0, 1) and every spam distribution strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from ..corpus import ALL_DIMENSIONS, Dimension
from .records import AggregatedScores, AnnotationRecord, ScoreSource

_NORMALIZATION_TOL = 1e-9


class MaceError(Exception):
    pass


@dataclass(frozen=True)
class MaceConfig:
    restarts: int = 10
    iterations: int = 50
    #: Pseudo-count added to expected counts; None means 0.1 / n_labels.
    smoothing: float | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.restarts < 1:
            raise MaceError(f"restarts must be >= 1, got {self.restarts}")
        if self.iterations < 1:
            raise MaceError(f"iterations must be >= 1, got {self.iterations}")
        if self.smoothing is not None and self.smoothing < 0:
            raise MaceError(f"smoothing must be >= 0, got {self.smoothing}")


@dataclass
class MaceResult:
    """Fitted parameters and posteriors from the best restart."""

    labels: list[Hashable]
    item_ids: list[Hashable]
    annotator_ids: list[Hashable]
    competences: np.ndarray          # (n_annotators,), each in (0, 1)
    spam_distributions: np.ndarray   # (n_annotators, k), rows sum to 1
    posteriors: np.ndarray           # (n_items, k), rows sum to 1
    log_likelihood: float
    log_likelihood_history: list[float] = field(default_factory=list)
    restart_index: int = 0

    def posterior_for(self, item: Hashable) -> np.ndarray:
        try:
            row = self.item_ids.index(item)
        except ValueError:
            raise MaceError(f"unknown item {item!r}") from None
        return self.posteriors[row]


def mace_em(
    matrix: Sequence[Sequence[Hashable | None]] | np.ndarray,
    labels: Sequence[Hashable],
    config: MaceConfig | None = None,
    item_ids: Sequence[Hashable] | None = None,
    annotator_ids: Sequence[Hashable] | None = None,
) -> MaceResult:
    """Fit the annotator model on an items x annotators matrix.

    ``matrix[i][j]`` is annotator j's label for item i, or None when missing.
    Requires k >= 2 labels and at least one rating per item.
    """
    config = config or MaceConfig()
    config.validate()
    labels = list(labels)
    k = len(labels)
    if k < 2:
        raise MaceError(f"need at least 2 labels, got {k}")
    label_index = {label: t for t, label in enumerate(labels)}
    if len(label_index) != k:
        raise MaceError("labels must be distinct")

    rows = [list(row) for row in matrix]
    n_items = len(rows)
    if n_items == 0:
        raise MaceError("matrix has no items")
    n_annotators = len(rows[0])
    if any(len(row) != n_annotators for row in rows):
        raise MaceError("matrix rows must all have the same length")

    item_list: list[int] = []
    annot_list: list[int] = []
    label_list: list[int] = []
    for i, row in enumerate(rows):
        seen_any = False
        for j, entry in enumerate(row):
            if entry is None:
                continue
            if entry not in label_index:
                raise MaceError(f"entry {entry!r} at item {i}, annotator {j} is not a known label")
            item_list.append(i)
            annot_list.append(j)
            label_list.append(label_index[entry])
            seen_any = True
        if not seen_any:
            raise MaceError(f"item {i} has no ratings")

    i_idx = np.asarray(item_list, dtype=np.intp)
    j_idx = np.asarray(annot_list, dtype=np.intp)
    a_idx = np.asarray(label_list, dtype=np.intp)
    delta = config.smoothing if config.smoothing is not None else 0.1 / k

    best: dict | None = None
    for restart in range(config.restarts):
        rng = np.random.default_rng([config.seed, restart])
        theta = rng.uniform(0.3, 0.95, size=n_annotators)
        xi = rng.uniform(0.1, 1.0, size=(n_annotators, k))
        xi /= xi.sum(axis=1, keepdims=True)

        history: list[float] = []
        for _ in range(config.iterations):
            posteriors, ll = _e_step(theta, xi, i_idx, j_idx, a_idx, n_items, k)
            _check_normalized(posteriors, "posteriors")
            if history and ll < history[-1] - _NORMALIZATION_TOL:
                raise MaceError(
                    f"log-likelihood decreased from {history[-1]!r} to {ll!r}; EM update is broken"
                )
            history.append(ll)
            theta, xi = _m_step(
                theta, xi, posteriors, i_idx, j_idx, a_idx, n_annotators, k, delta
            )
            _check_normalized(xi, "spam distributions")
        # Sync the reported posteriors with the final parameters.
        posteriors, ll = _e_step(theta, xi, i_idx, j_idx, a_idx, n_items, k)
        _check_normalized(posteriors, "posteriors")
        if ll < history[-1] - _NORMALIZATION_TOL:
            raise MaceError("final E-step decreased the log-likelihood")
        history.append(ll)
        if best is None or ll > best["ll"]:
            best = {
                "ll": ll,
                "restart": restart,
                "theta": theta,
                "xi": xi,
                "posteriors": posteriors,
                "history": history,
            }

    assert best is not None
    return MaceResult(
        labels=labels,
        item_ids=list(item_ids) if item_ids is not None else list(range(n_items)),
        annotator_ids=list(annotator_ids) if annotator_ids is not None else list(range(n_annotators)),
        competences=best["theta"],
        spam_distributions=best["xi"],
        posteriors=best["posteriors"],
        log_likelihood=best["ll"],
        log_likelihood_history=best["history"],
        restart_index=best["restart"],
    )


def _e_step(theta, xi, i_idx, j_idx, a_idx, n_items, k):
    theta_e = theta[j_idx]
    spam_e = (1.0 - theta_e) * xi[j_idx, a_idx]
    # P(rating | T_i = t) = theta_j * 1[a == t] + (1 - theta_j) * xi_j(a)
    w = np.tile(spam_e[:, None], (1, k))
    w[np.arange(len(a_idx)), a_idx] += theta_e
    log_v = np.full((n_items, k), -np.log(k))
    np.add.at(log_v, i_idx, np.log(w))
    m = log_v.max(axis=1, keepdims=True)
    z = np.exp(log_v - m)
    item_ll = m[:, 0] + np.log(z.sum(axis=1))
    posteriors = z / z.sum(axis=1, keepdims=True)
    return posteriors, float(item_ll.sum())


def _m_step(theta, xi, posteriors, i_idx, j_idx, a_idx, n_annotators, k, delta):
    theta_e = theta[j_idx]
    xi_e = xi[j_idx, a_idx]
    # P(not spammed | data) is nonzero only for T_i equal to the given rating.
    nonspam_e = posteriors[i_idx, a_idx] * theta_e / (theta_e + (1.0 - theta_e) * xi_e)
    nonspam = np.zeros(n_annotators)
    np.add.at(nonspam, j_idx, nonspam_e)
    totals = np.bincount(j_idx, minlength=n_annotators).astype(float)
    new_theta = (nonspam + delta) / (totals + 2.0 * delta)

    spam_counts = np.zeros((n_annotators, k))
    np.add.at(spam_counts, (j_idx, a_idx), 1.0 - nonspam_e)
    row_totals = spam_counts.sum(axis=1, keepdims=True)
    if delta == 0.0:
        # with zero smoothing an annotator who never spams has no counts at
        # all; their spam distribution is unidentifiable, so keep it uniform
        empty = row_totals[:, 0] == 0.0
        spam_counts[empty] = 1.0
        row_totals = spam_counts.sum(axis=1, keepdims=True)
    new_xi = (spam_counts + delta) / (row_totals + k * delta)
    return new_theta, new_xi


def _check_normalized(rows: np.ndarray, what: str) -> None:
    if not np.isfinite(rows).all():
        raise MaceError(f"{what} contain non-finite values")
    err = np.abs(rows.sum(axis=1) - 1.0).max()
    if err > _NORMALIZATION_TOL:
        raise MaceError(f"{what} drifted off the simplex (max error {err:.3e})")


def mace_p(result: MaceResult, item: Hashable, positive_label: Hashable) -> float:
    """Posterior probability of ``positive_label`` for ``item``."""
    try:
        t = result.labels.index(positive_label)
    except ValueError:
        raise MaceError(f"unknown label {positive_label!r}") from None
    return float(result.posterior_for(item)[t])


def most_probable_labels(result: MaceResult) -> list[Hashable]:
    """Argmax label per item; ties resolve to the earlier label."""
    picks = result.posteriors.argmax(axis=1)
    return [result.labels[t] for t in picks]


def mace_scores(
    annotations: Iterable[AnnotationRecord],
    positive_label: int = 1,
    config: MaceConfig | None = None,
    dimensions: Sequence[Dimension] | None = None,
    broadcast_single_dimension: bool = True,
) -> list[AggregatedScores]:
    """MACE-P table: per document, the posterior of the positive label.

    Runs one EM fit per dimension that has any ratings.  Dimensions with a
    single distinct label are skipped (no model to fit).
    """
    records = list(annotations)
    dims = list(dimensions) if dimensions is not None else list(ALL_DIMENSIONS)
    annotator_ids = sorted({ann.annotator_id for ann in records})
    annot_pos = {a: j for j, a in enumerate(annotator_ids)}

    per_doc: dict[str, dict[Dimension, float]] = {}
    for dim in dims:
        cells: dict[str, dict[int, int]] = {}
        for ann in records:
            rating = ann.ratings.get(dim)
            if rating is not None:
                cells.setdefault(ann.doc_id, {})[annot_pos[ann.annotator_id]] = rating
        if not cells:
            continue
        labels = sorted({r for row in cells.values() for r in row.values()})
        if len(labels) < 2:
            continue
        doc_ids = sorted(cells)
        matrix = [
            [cells[doc_id].get(j) for j in range(len(annotator_ids))] for doc_id in doc_ids
        ]
        result = mace_em(matrix, labels, config, item_ids=doc_ids, annotator_ids=annotator_ids)
        if positive_label not in result.labels:
            raise MaceError(
                f"positive label {positive_label!r} never occurs for dimension {dim.value}"
            )
        for doc_id in doc_ids:
            per_doc.setdefault(doc_id, {})[dim] = mace_p(result, doc_id, positive_label)

    return [
        AggregatedScores(
            doc_id=doc_id,
            source=ScoreSource.MACE_P,
            scores=_broadcast_dims(scores, broadcast_single_dimension),
        )
        for doc_id, scores in sorted(per_doc.items())
    ]


def _broadcast_dims(scores: dict[Dimension, float], broadcast: bool) -> dict[Dimension, float]:
    if broadcast and len(scores) == 1:
        value = next(iter(scores.values()))
        return {dim: value for dim in ALL_DIMENSIONS}
    return scores
