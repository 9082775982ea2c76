"""Annotation records, rating scales, and aggregated-score file formats.

Annotation files are JSON-lines with keys ``doc_id``, ``annotator_id``,
``group`` and ``scores``; a rating of JSON ``null`` means the annotator could
not judge that dimension and is represented as Python ``None`` throughout.
Aggregated scores travel as TSV
(``doc_id<TAB>source<TAB>cogency<TAB>effectiveness<TAB>reasonableness<TAB>overall``)
with ``NA`` for missing values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

from ..corpus import ALL_DIMENSIONS, Dimension


class AnnotationError(Exception):
    """Raised for malformed annotation files or off-scale ratings."""


@dataclass(frozen=True)
class Scale:
    """An integer rating scale with inclusive bounds."""

    name: str
    low: int
    high: int

    def contains(self, value: int) -> bool:
        return self.low <= value <= self.high

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.low), float(self.high)


FIVE_POINT = Scale("five_point", 1, 5)
THREE_POINT = Scale("three_point", 1, 3)
BINARY = Scale("binary", 0, 1)

_SCALES = {s.name: s for s in (FIVE_POINT, THREE_POINT, BINARY)}


def scale_by_name(name: str) -> Scale:
    try:
        return _SCALES[name]
    except KeyError:
        raise AnnotationError(f"unknown scale {name!r}; known: {sorted(_SCALES)}") from None


class AnnotatorGroup(str, Enum):
    EXPERT = "expert"
    CROWD = "crowd"
    UNSPECIFIED = "unspecified"


@dataclass
class AnnotationRecord:
    """One annotator's ratings for one document.

    ``ratings`` maps each judged dimension to an integer on the active scale,
    or ``None`` for "cannot judge".  Dimensions the annotator never saw are
    simply absent.
    """

    doc_id: str
    annotator_id: str
    group: AnnotatorGroup = AnnotatorGroup.UNSPECIFIED
    ratings: dict[Dimension, int | None] = field(default_factory=dict)


class ScoreSource(str, Enum):
    EXPERT_MEAN = "expert_mean"
    CROWD_MEAN = "crowd_mean"
    MIX = "mix"
    MAJORITY = "majority"
    MACE_P = "mace_p"
    WEIGHTED_AVG = "weighted_avg"


@dataclass
class AggregatedScores:
    """Per-document real-valued scores from one named aggregation source."""

    doc_id: str
    source: ScoreSource
    scores: dict[Dimension, float] = field(default_factory=dict)


def parse_annotations(path: str | Path, scale: Scale = FIVE_POINT) -> list[AnnotationRecord]:
    """Parse a JSON-lines annotation file, validating ratings against ``scale``."""
    records: list[AnnotationRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"{path}: line {lineno}: malformed JSON: {exc}") from exc
            try:
                records.append(_record_from_raw(raw, scale))
            except AnnotationError as exc:
                raise AnnotationError(f"{path}: line {lineno}: {exc}") from None
    return records


def _record_from_raw(raw: dict, scale: Scale) -> AnnotationRecord:
    for key in ("doc_id", "annotator_id"):
        if key not in raw or not isinstance(raw[key], str):
            raise AnnotationError(f"missing or non-string field {key!r}")
    group_raw = raw.get("group", "unspecified")
    try:
        group = AnnotatorGroup(str(group_raw).lower())
    except ValueError:
        raise AnnotationError(f"unknown group {group_raw!r}") from None
    scores_raw = raw.get("scores", {})
    if not isinstance(scores_raw, dict):
        raise AnnotationError("'scores' must be an object")
    ratings: dict[Dimension, int | None] = {}
    for key, value in scores_raw.items():
        try:
            dim = Dimension(key)
        except ValueError:
            raise AnnotationError(f"unknown dimension {key!r}") from None
        if value is None:
            ratings[dim] = None
        elif isinstance(value, int) and not isinstance(value, bool):
            if not scale.contains(value):
                raise AnnotationError(
                    f"rating {value} for {key} off the {scale.name} scale [{scale.low}, {scale.high}]"
                )
            ratings[dim] = value
        else:
            raise AnnotationError(f"rating for {key} must be an integer or null, got {value!r}")
    return AnnotationRecord(
        doc_id=raw["doc_id"], annotator_id=raw["annotator_id"], group=group, ratings=ratings
    )


_SCORES_HEADER = ["doc_id", "source", "cogency", "effectiveness", "reasonableness", "overall"]


def _format_score(value: float | None) -> str:
    return "NA" if value is None else repr(float(value))


def write_scores_tsv(rows: Iterable[AggregatedScores], out: str | Path | IO[str]) -> None:
    """Write aggregated scores as TSV, rows sorted by (doc_id, source)."""
    own = isinstance(out, (str, Path))
    fh = open(out, "w", encoding="utf-8") if own else out
    try:
        fh.write("\t".join(_SCORES_HEADER) + "\n")
        for row in sorted(rows, key=lambda r: (r.doc_id, r.source.value)):
            cells = [row.doc_id, row.source.value]
            cells += [_format_score(row.scores.get(dim)) for dim in ALL_DIMENSIONS]
            fh.write("\t".join(cells) + "\n")
    finally:
        if own:
            fh.close()


def read_scores_tsv(path: str | Path) -> list[AggregatedScores]:
    rows: list[AggregatedScores] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            cells = line.rstrip("\n").split("\t")
            if cells == _SCORES_HEADER:
                continue
            if len(cells) != len(_SCORES_HEADER):
                raise AnnotationError(f"{path}: line {lineno}: expected {len(_SCORES_HEADER)} columns")
            try:
                source = ScoreSource(cells[1])
            except ValueError:
                raise AnnotationError(f"{path}: line {lineno}: unknown source {cells[1]!r}") from None
            scores: dict[Dimension, float] = {}
            for dim, cell in zip(ALL_DIMENSIONS, cells[2:]):
                if cell != "NA":
                    scores[dim] = float(cell)
            rows.append(AggregatedScores(doc_id=cells[0], source=source, scores=scores))
    return rows


def scores_by_source(
    rows: Iterable[AggregatedScores],
) -> dict[str, dict[str, dict[Dimension, float]]]:
    """Index score rows as source -> doc_id -> dimension -> value."""
    out: dict[str, dict[str, dict[Dimension, float]]] = {}
    for row in rows:
        out.setdefault(row.source.value, {})[row.doc_id] = dict(row.scores)
    return out
