"""Corpus ingestion: parse, validate, filter, and split argument collections.

A corpus file is JSON-lines, one document per line with required keys
``id`` and ``text``; ``title``, ``stance``, ``stars`` and ``domain`` are
optional.  Unknown keys are preserved so that parse -> serialize round-trips
losslessly.  Split files are two-column TSV (``id<TAB>split``).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .aggregation import AnnotationRecord


class Domain(str, Enum):
    CQA = "cqa"
    DEBATES = "debates"
    REVIEWS = "reviews"
    # Carries out-of-corpus collections (e.g. binary-judgment corpora)
    # through the same document type.
    EXTERNAL = "external"


class Dimension(str, Enum):
    COGENCY = "cogency"
    EFFECTIVENESS = "effectiveness"
    REASONABLENESS = "reasonableness"
    OVERALL = "overall"


#: Sub-dimensions in the fixed order used wherever scores are concatenated.
SUB_DIMENSIONS = (Dimension.COGENCY, Dimension.EFFECTIVENESS, Dimension.REASONABLENESS)
ALL_DIMENSIONS = SUB_DIMENSIONS + (Dimension.OVERALL,)


class Split(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class CorpusError(Exception):
    """Raised for malformed corpus or split files and invariant violations."""


_KNOWN_KEYS = frozenset({"id", "text", "title", "stance", "stars", "domain"})


@dataclass
class ArgumentDoc:
    """One argumentative text plus its metadata.

    ``extra`` holds unknown JSON keys verbatim so serialization can round-trip
    files produced by other tools.
    """

    id: str
    domain: Domain
    text: str
    title: str | None = None
    stance: str | None = None
    stars: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.stars is not None and not 1 <= self.stars <= 5:
            raise CorpusError(f"stars must be in 1..5, got {self.stars!r}")

    @property
    def word_count(self) -> int:
        """Number of whitespace-separated tokens in ``text``."""
        return len(self.text.split())


def parse_corpus(path: str | Path, default_domain: Domain | None = None) -> list[ArgumentDoc]:
    """Parse a JSON-lines corpus file into documents, in file order.

    A per-line ``domain`` key wins over ``default_domain``.  Malformed lines,
    missing required fields and duplicate ids raise :class:`CorpusError`
    naming the offending line.
    """
    docs: list[ArgumentDoc] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: malformed JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"{path}: line {lineno}: expected a JSON object")
            try:
                doc = _doc_from_record(record, default_domain)
            except CorpusError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from None
            if doc.id in seen:
                raise CorpusError(f"{path}: line {lineno}: duplicate id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs


def _doc_from_record(record: dict, default_domain: Domain | None) -> ArgumentDoc:
    for key in ("id", "text"):
        if key not in record:
            raise CorpusError(f"missing required field {key!r}")
        if not isinstance(record[key], str):
            raise CorpusError(f"field {key!r} must be a string")
    raw_domain = record.get("domain")
    if raw_domain is not None:
        try:
            domain = Domain(str(raw_domain).lower())
        except ValueError:
            raise CorpusError(f"unknown domain {raw_domain!r}") from None
    elif default_domain is not None:
        domain = default_domain
    else:
        raise CorpusError("no domain on the line and no default domain given")
    stars = record.get("stars")
    if stars is not None and not isinstance(stars, int):
        raise CorpusError(f"stars must be an integer, got {stars!r}")
    extra = {k: v for k, v in record.items() if k not in _KNOWN_KEYS}
    return ArgumentDoc(
        id=record["id"],
        domain=domain,
        text=record["text"],
        title=record.get("title"),
        stance=record.get("stance"),
        stars=stars,
        extra=extra,
    )


def serialize_corpus(docs: Iterable[ArgumentDoc], path: str | Path) -> None:
    """Write documents as JSON-lines; inverse of :func:`parse_corpus`."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(doc_to_json(doc) + "\n")


def doc_to_json(doc: ArgumentDoc) -> str:
    record: dict = {"id": doc.id, "domain": doc.domain.value, "text": doc.text}
    if doc.title is not None:
        record["title"] = doc.title
    if doc.stance is not None:
        record["stance"] = doc.stance
    if doc.stars is not None:
        record["stars"] = doc.stars
    for key in sorted(doc.extra):
        record[key] = doc.extra[key]
    return json.dumps(record, ensure_ascii=False, sort_keys=False)


def word_count_filter(doc: ArgumentDoc, min_words: int = 70, max_words: int = 200) -> bool:
    """True iff the document's word count lies in [min_words, max_words].

    Bounds are inclusive; counting is whitespace tokenization.
    """
    if min_words > max_words:
        raise ValueError(f"min_words {min_words} > max_words {max_words}")
    return min_words <= doc.word_count <= max_words


def filter_by_word_count(
    docs: Iterable[ArgumentDoc], min_words: int = 70, max_words: int = 200
) -> list[ArgumentDoc]:
    return [d for d in docs if word_count_filter(d, min_words, max_words)]


def build_splits(
    docs: Sequence[ArgumentDoc],
    annotations: Iterable["AnnotationRecord"],
    seed: int,
    train_fraction: float = 0.7,
) -> dict[str, Split]:
    """Assign every document to train/dev/test.

    Documents annotated by both the expert and the crowd group go to test;
    the remainder is shuffled (ids sorted, then ``random.Random(seed)``) and
    the first ``floor(train_fraction * len(remainder))`` become train, the
    rest dev.  Deterministic for fixed (docs, annotations, seed).
    """
    if not 0.0 <= train_fraction <= 1.0:
        raise ValueError(f"train_fraction must be in [0, 1], got {train_fraction}")
    ids = {doc.id for doc in docs}
    groups_by_doc: dict[str, set[str]] = {}
    for ann in annotations:
        if ann.doc_id not in ids:
            raise CorpusError(f"annotation references unknown doc id {ann.doc_id!r}")
        group = getattr(ann.group, "value", str(ann.group))
        if group in ("expert", "crowd"):
            groups_by_doc.setdefault(ann.doc_id, set()).add(group)

    assignment: dict[str, Split] = {}
    remainder = []
    for doc in docs:
        if groups_by_doc.get(doc.id) == {"expert", "crowd"}:
            assignment[doc.id] = Split.TEST
        else:
            remainder.append(doc.id)
    remainder.sort()
    random.Random(seed).shuffle(remainder)
    n_train = int(train_fraction * len(remainder))
    for i, doc_id in enumerate(remainder):
        assignment[doc_id] = Split.TRAIN if i < n_train else Split.DEV
    return assignment


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str) -> None:
        self.violations.append(message)


def validate_corpus(
    docs: Sequence[ArgumentDoc],
    splits: dict[str, Split] | None = None,
    expected_counts: tuple[int, int, int] | None = None,
    annotations: Iterable["AnnotationRecord"] | None = None,
) -> ValidationReport:
    """Collect invariant violations; an empty report means the corpus is valid.

    ``expected_counts`` is (train, dev, test).  When ``annotations`` are given
    and carry group metadata, test documents must be annotated by both groups.
    """
    report = ValidationReport()
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            report.add(f"duplicate id {doc.id!r}")
        seen.add(doc.id)

    if splits is not None:
        for doc in docs:
            if doc.id not in splits:
                report.add(f"doc {doc.id!r} has no split assignment")
        for doc_id in splits:
            if doc_id not in seen:
                report.add(f"split assigns unknown id {doc_id!r}")
        if expected_counts is not None:
            got = tuple(
                sum(1 for s in splits.values() if s is which)
                for which in (Split.TRAIN, Split.DEV, Split.TEST)
            )
            if got != tuple(expected_counts):
                report.add(
                    f"split counts (train, dev, test) = {got}, expected {tuple(expected_counts)}"
                )
        if annotations is not None:
            groups_by_doc: dict[str, set[str]] = {}
            any_group = False
            for ann in annotations:
                group = getattr(ann.group, "value", str(ann.group))
                if group in ("expert", "crowd"):
                    any_group = True
                    groups_by_doc.setdefault(ann.doc_id, set()).add(group)
            if any_group:
                for doc_id, split in splits.items():
                    if split is Split.TEST and groups_by_doc.get(doc_id) != {"expert", "crowd"}:
                        report.add(f"test doc {doc_id!r} lacks annotations from both groups")
    return report


def read_split_file(path: str | Path) -> dict[str, Split]:
    splits: dict[str, Split] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}: line {lineno}: expected 'id<TAB>split'")
            doc_id, split = parts
            try:
                splits[doc_id] = Split(split)
            except ValueError:
                raise CorpusError(f"{path}: line {lineno}: unknown split {split!r}") from None
    return splits


def write_split_file(splits: dict[str, Split], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(splits):
            fh.write(f"{doc_id}\t{splits[doc_id].value}\n")
