"""Rating combiners: means, mix scores, majority votes, weighted averages."""

from __future__ import annotations

from collections import Counter
from typing import Hashable, Iterable, Mapping, Sequence

from ..corpus import ALL_DIMENSIONS, Dimension
from .records import AggregatedScores, AnnotationRecord, AnnotatorGroup, ScoreSource


def mean_rating(ratings: Iterable[float | None]) -> float | None:
    """Arithmetic mean of the defined ratings; None if nothing is judgeable.

    "Cannot judge" entries (``None``) are excluded, not imputed.
    """
    values = [r for r in ratings if r is not None]
    if not values:
        return None
    return sum(values) / len(values)


def mix_score(expert_mean: float | None, crowd_mean: float | None) -> float:
    """Average of the expert-group and crowd-group means."""
    if expert_mean is None or crowd_mean is None:
        raise ValueError("mix score needs both group means to be defined")
    return (expert_mean + crowd_mean) / 2.0


def majority_vote(labels: Sequence[Hashable]) -> Hashable:
    """Most frequent label; ties break toward the smallest label value."""
    if not labels:
        raise ValueError("majority_vote needs at least one label")
    counts = Counter(labels)
    best = max(counts.values())
    return min(label for label, count in counts.items() if count == best)


def weighted_average(
    ratings: Sequence[float], weights: Sequence[float] | None = None
) -> float:
    """Weighted mean of ratings; uniform weights when none are given."""
    if not ratings:
        raise ValueError("weighted_average needs at least one rating")
    if weights is None:
        weights = [1.0] * len(ratings)
    if len(weights) != len(ratings):
        raise ValueError(f"{len(weights)} weights for {len(ratings)} ratings")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    total = sum(weights)
    if total == 0:
        raise ValueError("weights must not all be zero")
    return sum(w * r for w, r in zip(weights, ratings)) / total


def _ratings_by_doc(
    annotations: Iterable[AnnotationRecord],
    group: AnnotatorGroup | None = None,
) -> dict[str, dict[Dimension, list[int]]]:
    by_doc: dict[str, dict[Dimension, list[int]]] = {}
    for ann in annotations:
        if group is not None and ann.group is not group:
            continue
        per_dim = by_doc.setdefault(ann.doc_id, {})
        for dim, rating in ann.ratings.items():
            if rating is not None:
                per_dim.setdefault(dim, []).append(rating)
    return by_doc


def _broadcast(scores: dict[Dimension, float], broadcast: bool) -> dict[Dimension, float]:
    # Binary-judgment corpora carry a single dimension; replicating it across
    # all four columns lets per-dimension evaluation run unchanged.
    if broadcast and len(scores) == 1:
        value = next(iter(scores.values()))
        return {dim: value for dim in ALL_DIMENSIONS}
    return scores


def group_mean_scores(
    annotations: Iterable[AnnotationRecord], group: AnnotatorGroup
) -> list[AggregatedScores]:
    """Per-document mean of one annotator group's ratings, per dimension."""
    if group is AnnotatorGroup.EXPERT:
        source = ScoreSource.EXPERT_MEAN
    elif group is AnnotatorGroup.CROWD:
        source = ScoreSource.CROWD_MEAN
    else:
        raise ValueError("group means are defined for the expert and crowd groups")
    rows = []
    for doc_id, per_dim in sorted(_ratings_by_doc(annotations, group).items()):
        scores = {dim: m for dim, values in per_dim.items() if (m := mean_rating(values)) is not None}
        if scores:
            rows.append(AggregatedScores(doc_id=doc_id, source=source, scores=scores))
    return rows


def mix_scores(
    expert_rows: Iterable[AggregatedScores], crowd_rows: Iterable[AggregatedScores]
) -> list[AggregatedScores]:
    """Mix table over documents scored by both groups (per shared dimension)."""
    expert = {row.doc_id: row.scores for row in expert_rows}
    crowd = {row.doc_id: row.scores for row in crowd_rows}
    rows = []
    for doc_id in sorted(expert.keys() & crowd.keys()):
        shared = expert[doc_id].keys() & crowd[doc_id].keys()
        scores = {dim: mix_score(expert[doc_id][dim], crowd[doc_id][dim]) for dim in shared}
        if scores:
            rows.append(AggregatedScores(doc_id=doc_id, source=ScoreSource.MIX, scores=scores))
    return rows


def majority_scores(
    annotations: Iterable[AnnotationRecord], broadcast_single_dimension: bool = True
) -> list[AggregatedScores]:
    rows = []
    for doc_id, per_dim in sorted(_ratings_by_doc(annotations).items()):
        scores = {dim: float(majority_vote(values)) for dim, values in per_dim.items() if values}
        if scores:
            rows.append(
                AggregatedScores(
                    doc_id=doc_id,
                    source=ScoreSource.MAJORITY,
                    scores=_broadcast(scores, broadcast_single_dimension),
                )
            )
    return rows


def weighted_average_scores(
    annotations: Iterable[AnnotationRecord],
    annotator_weights: Mapping[str, float] | None = None,
    broadcast_single_dimension: bool = True,
) -> list[AggregatedScores]:
    """Weighted-average table for binary ratings, in [0, 1] per document.

    ``annotator_weights`` maps annotator ids to non-negative reliability
    weights; absent ids (and absent mapping) mean uniform weights.
    """
    per_doc: dict[str, dict[Dimension, tuple[list[float], list[float]]]] = {}
    for ann in annotations:
        weight = 1.0 if annotator_weights is None else float(annotator_weights.get(ann.annotator_id, 1.0))
        for dim, rating in ann.ratings.items():
            if rating is None:
                continue
            values, weights = per_doc.setdefault(ann.doc_id, {}).setdefault(dim, ([], []))
            values.append(float(rating))
            weights.append(weight)
    rows = []
    for doc_id, per_dim in sorted(per_doc.items()):
        scores = {
            dim: weighted_average(values, weights) for dim, (values, weights) in per_dim.items()
        }
        if scores:
            rows.append(
                AggregatedScores(
                    doc_id=doc_id,
                    source=ScoreSource.WEIGHTED_AVG,
                    scores=_broadcast(scores, broadcast_single_dimension),
                )
            )
    return rows
