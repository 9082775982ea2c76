"""Inter-annotator reliability: Krippendorff's alpha and annotator blocking.

Alpha is computed from the coincidence matrix over units with at least two
ratings: alpha = 1 - D_o / D_e, where D_o weights coincidences and D_e weights
chance pairings by the chosen distance metric.  Degenerate data (zero expected
disagreement) yields ``None`` rather than a number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ..corpus import ALL_DIMENSIONS, Dimension
from .records import AnnotationRecord


class AlphaMetric(str, Enum):
    NOMINAL = "nominal"
    INTERVAL = "interval"
    ORDINAL = "ordinal"


@dataclass
class AlphaReport:
    """Group-level alpha plus per-annotator agreement-with-the-rest scores."""

    alpha: float | None
    n_units: int
    metric: AlphaMetric
    per_annotator: dict[str, float] = field(default_factory=dict)
    blocked: set[str] = field(default_factory=set)
    #: Annotators with no items shared with anyone else; no score is defined.
    excluded: set[str] = field(default_factory=set)
    threshold: float = 0.1


def krippendorff_alpha(
    matrix: Sequence[Sequence[float | None]] | np.ndarray,
    metric: AlphaMetric = AlphaMetric.INTERVAL,
) -> float | None:
    """Alpha for an items x annotators matrix with missing entries (None/NaN).

    Units with fewer than two ratings are ignored.  Returns None when the
    expected disagreement is zero (e.g. every rating is the same constant).
    """
    units: list[list[float]] = []
    for row in matrix:
        values = [float(v) for v in row if v is not None and not (isinstance(v, float) and np.isnan(v))]
        if len(values) >= 2:
            units.append(values)
    if not units:
        return None

    distinct = sorted({v for unit in units for v in unit})
    index = {v: i for i, v in enumerate(distinct)}
    k = len(distinct)

    coincidence = np.zeros((k, k))
    for unit in units:
        m = len(unit)
        counts = np.zeros(k)
        for v in unit:
            counts[index[v]] += 1
        pair = np.outer(counts, counts) - np.diag(counts)
        coincidence += pair / (m - 1)

    margins = coincidence.sum(axis=1)
    n = margins.sum()
    dist = _distance_matrix(np.asarray(distinct), margins, metric)

    d_observed = float((coincidence * dist).sum()) / float(n)
    d_expected = float(((np.outer(margins, margins) - np.diag(margins)) * dist).sum()) / float(
        n * (n - 1)
    )
    if d_expected == 0.0:
        return None
    return float(1.0 - d_observed / d_expected)


def _distance_matrix(values: np.ndarray, margins: np.ndarray, metric: AlphaMetric) -> np.ndarray:
    if metric is AlphaMetric.INTERVAL:
        return (values[:, None] - values[None, :]) ** 2
    if metric is AlphaMetric.NOMINAL:
        return 1.0 - np.eye(len(values))
    if metric is AlphaMetric.ORDINAL:
        # delta(v, w) = (sum of margins from v through w, minus half the two
        # endpoint margins) squared; values arrive sorted ascending.
        k = len(values)
        cumulative = np.concatenate([[0.0], np.cumsum(margins)])
        dist = np.zeros((k, k))
        for a in range(k):
            for b in range(a + 1, k):
                between = cumulative[b + 1] - cumulative[a]
                dist[a, b] = dist[b, a] = (between - (margins[a] + margins[b]) / 2.0) ** 2
        return dist
    raise ValueError(f"unknown metric {metric!r}")


def per_annotator_alpha(
    annotations: Iterable[AnnotationRecord],
    dimensions: Sequence[Dimension] | None = None,
    threshold: float = 0.1,
    metric: AlphaMetric = AlphaMetric.INTERVAL,
) -> AlphaReport:
    """Score each annotator against the mean of the rest and flag outliers.

    For every annotator j and dimension, a two-rater alpha is computed between
    j's ratings and the mean rating of the remaining annotators on the items
    they share; the per-annotator score averages over dimensions where that
    alpha is defined.  Annotators scoring below ``threshold`` are blocked;
    annotators with no shared items anywhere are excluded instead.
    """
    records = list(annotations)
    dims = list(dimensions) if dimensions is not None else list(ALL_DIMENSIONS)
    annotators = sorted({ann.annotator_id for ann in records})
    if len(annotators) < 2:
        raise ValueError("per-annotator alpha needs at least two annotators")

    # dimension -> doc -> annotator -> rating
    by_dim: dict[Dimension, dict[str, dict[str, float]]] = {dim: {} for dim in dims}
    for ann in records:
        for dim in dims:
            rating = ann.ratings.get(dim)
            if rating is not None:
                by_dim[dim].setdefault(ann.doc_id, {})[ann.annotator_id] = float(rating)

    pooled: list[float] = []
    n_units = 0
    for dim in dims:
        docs = by_dim[dim]
        if not docs:
            continue
        doc_ids = sorted(docs)
        matrix = [[docs[d].get(a) for a in annotators] for d in doc_ids]
        n_units += sum(1 for row in matrix if sum(v is not None for v in row) >= 2)
        alpha = krippendorff_alpha(matrix, metric)
        if alpha is not None:
            pooled.append(alpha)

    per_annotator: dict[str, float] = {}
    excluded: set[str] = set()
    for annotator in annotators:
        scores: list[float] = []
        for dim in dims:
            docs = by_dim[dim]
            pairs: list[list[float | None]] = []
            for doc_id in sorted(docs):
                ratings = docs[doc_id]
                if annotator not in ratings:
                    continue
                rest = [v for a, v in ratings.items() if a != annotator]
                if rest:
                    pairs.append([ratings[annotator], sum(rest) / len(rest)])
            if len(pairs) < 2:
                continue
            alpha = krippendorff_alpha(pairs, metric)
            if alpha is not None:
                scores.append(alpha)
        if scores:
            per_annotator[annotator] = sum(scores) / len(scores)
        else:
            excluded.add(annotator)

    blocked = {a for a, score in per_annotator.items() if score < threshold}
    return AlphaReport(
        alpha=sum(pooled) / len(pooled) if pooled else None,
        n_units=n_units,
        metric=metric,
        per_annotator=per_annotator,
        blocked=blocked,
        excluded=excluded,
        threshold=threshold,
    )
