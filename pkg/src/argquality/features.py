"""Document representations: length, tf-idf n-grams, averaged embeddings, CFS.

Feature vectors are sparse maps from contiguous feature indices to values;
tf-idf vectors are L2-normalized so their norm is exactly 1 (or 0 for
documents containing only out-of-vocabulary material).
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .corpus import ArgumentDoc

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def char_length(doc: ArgumentDoc) -> int:
    """Number of Unicode scalar values in the text, whitespace included."""
    return len(doc.text)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class FeatureVector:
    """Sparse feature map; no explicit zeros, indices below ``dimension``."""

    entries: dict[int, float]
    dimension: int

    def __post_init__(self) -> None:
        for index, value in self.entries.items():
            if not 0 <= index < self.dimension:
                raise ValueError(f"index {index} outside dimensionality {self.dimension}")
            if value == 0.0:
                raise ValueError(f"explicit zero stored at index {index}")

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        for index, value in self.entries.items():
            dense[index] = value
        return dense

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.entries.values()))


def to_csr(vectors: Sequence[FeatureVector]) -> sparse.csr_matrix:
    """Stack sparse feature vectors into a CSR matrix (rows = documents)."""
    if not vectors:
        raise ValueError("no vectors to stack")
    dimension = vectors[0].dimension
    if any(v.dimension != dimension for v in vectors):
        raise ValueError("vectors have inconsistent dimensionality")
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for vec in vectors:
        for index in sorted(vec.entries):
            indices.append(index)
            data.append(vec.entries[index])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(len(vectors), dimension),
    )


def corpus_fingerprint(token_lists: Sequence[Sequence[str]]) -> str:
    digest = hashlib.sha256()
    for tokens in token_lists:
        digest.update("\x1f".join(tokens).encode("utf-8"))
        digest.update(b"\x1e")
    return digest.hexdigest()


@dataclass
class Vocabulary:
    """Fitted n-gram vocabulary with document frequencies and idf weights."""

    index: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int
    ngram_range: tuple[int, int]
    min_df: int
    fitted_on: str

    def idf(self, term: str) -> float:
        # Smoothed idf; +1 terms keep every weight positive and finite.
        return math.log((1 + self.n_docs) / (1 + self.doc_freq[term])) + 1.0

    def __len__(self) -> int:
        return len(self.index)

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": 1,
            "ngram_range": list(self.ngram_range),
            "min_df": self.min_df,
            "n_docs": self.n_docs,
            "fitted_on": self.fitted_on,
            "terms": {
                term: {"index": self.index[term], "df": self.doc_freq[term]}
                for term in sorted(self.index)
            },
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=0, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        terms = payload["terms"]
        return cls(
            index={t: meta["index"] for t, meta in terms.items()},
            doc_freq={t: meta["df"] for t, meta in terms.items()},
            n_docs=payload["n_docs"],
            ngram_range=tuple(payload["ngram_range"]),
            min_df=payload["min_df"],
            fitted_on=payload["fitted_on"],
        )


def ngrams(tokens: Sequence[str], low: int, high: int) -> Iterable[str]:
    for n in range(low, high + 1):
        for start in range(len(tokens) - n + 1):
            yield " ".join(tokens[start : start + n])


def fit_tfidf(
    corpus: Sequence[Sequence[str]],
    ngram_range: tuple[int, int] = (1, 1),
    min_df: int = 1,
) -> Vocabulary:
    """Fit an n-gram vocabulary over tokenized documents."""
    low, high = ngram_range
    if low < 1 or high < low:
        raise ValueError(f"invalid ngram_range {ngram_range}")
    if not corpus:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    doc_freq: dict[str, int] = {}
    for tokens in corpus:
        for gram in set(ngrams(tokens, low, high)):
            doc_freq[gram] = doc_freq.get(gram, 0) + 1
    kept = sorted(term for term, df in doc_freq.items() if df >= min_df)
    return Vocabulary(
        index={term: i for i, term in enumerate(kept)},
        doc_freq={term: doc_freq[term] for term in kept},
        n_docs=len(corpus),
        ngram_range=(low, high),
        min_df=min_df,
        fitted_on=corpus_fingerprint(corpus),
    )


def transform_tfidf(vocab: Vocabulary, tokens: Sequence[str]) -> FeatureVector:
    """tf (raw count) x idf, L2-normalized; OOV n-grams are ignored."""
    counts: dict[int, float] = {}
    terms: dict[int, str] = {}
    for gram in ngrams(tokens, *vocab.ngram_range):
        index = vocab.index.get(gram)
        if index is not None:
            counts[index] = counts.get(index, 0.0) + 1.0
            terms[index] = gram
    weighted = {index: count * vocab.idf(terms[index]) for index, count in counts.items()}
    norm = math.sqrt(sum(v * v for v in weighted.values()))
    if norm > 0:
        weighted = {index: value / norm for index, value in weighted.items()}
    return FeatureVector(entries=weighted, dimension=len(vocab))


@dataclass
class EmbeddingTable:
    vectors: dict[str, np.ndarray]
    dim: int

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a textual word2vec-format vector file (optional ``N d`` header)."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header line
                except ValueError:
                    pass
            if len(parts) < 2 or not parts[0]:
                continue
            token, values = parts[0], parts[1:]
            vec = np.asarray([float(v) for v in values])
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"{path}: line {lineno}: expected {dim} values, got {len(vec)}")
            vectors.setdefault(token, vec)
    if dim is None:
        raise ValueError(f"{path}: no vectors found")
    return EmbeddingTable(vectors=vectors, dim=dim)


def embed_average(tokens: Sequence[str], table: EmbeddingTable) -> tuple[np.ndarray, int]:
    """Mean of in-vocabulary token vectors and the number of hits.

    Documents with no in-vocabulary token map to the zero vector instead of
    failing, so downstream pipelines never abort on degenerate text.
    """
    if not table.vectors:
        raise ValueError("embedding table is empty")
    hits = [table.vectors[t] for t in tokens if t in table.vectors]
    if not hits:
        return np.zeros(table.dim), 0
    return np.mean(hits, axis=0), len(hits)


def cfs_select(
    X: Sequence[FeatureVector] | np.ndarray, y: Sequence[float], k: int
) -> list[int]:
    """Indices of the k features most |Pearson|-correlated with the target.

    Constant columns score 0; ties break toward the lower index.  Returns
    fewer than k indices only when the feature space is smaller than k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(X)
    if n != len(y) or n < 2:
        raise ValueError("need matching X/y with at least two rows")
    y_arr = np.asarray(y, dtype=float)
    y_centered = y_arr - y_arr.mean()
    y_ss = float(y_centered @ y_centered)

    if isinstance(X, np.ndarray):
        matrix = sparse.csr_matrix(X)
        dimension = X.shape[1]
    else:
        matrix = to_csr(X)
        dimension = matrix.shape[1]

    col_sum = np.asarray(matrix.sum(axis=0)).ravel()
    col_sumsq = np.asarray(matrix.multiply(matrix).sum(axis=0)).ravel()
    col_dot_y = np.asarray(matrix.T @ y_arr).ravel()

    mean = col_sum / n
    ss = col_sumsq - n * mean**2
    cov = col_dot_y - mean * y_arr.sum()
    scores = np.zeros(dimension)
    if y_ss > 0:
        valid = ss > 1e-12
        scores[valid] = np.abs(cov[valid] / np.sqrt(ss[valid] * y_ss))
    order = sorted(range(dimension), key=lambda i: (-scores[i], i))
    return order[: min(k, dimension)]


def type_token_ratio(tokens: Sequence[str]) -> float:
    return len(set(tokens)) / len(tokens) if tokens else 0.0


class WachsmuthFeaturizer:
    """Reduced feature-rich pipeline: token 1-3 gram tf-idf plus surface
    statistics (character length, word count, type-token ratio), filtered by
    correlation-based feature selection on the training set.

    Surface features are z-scored with training statistics so they live on a
    scale comparable to the normalized tf-idf block.
    """

    def __init__(self, ngram_range: tuple[int, int] = (1, 3), min_df: int = 1, top_k: int = 500):
        self.ngram_range = ngram_range
        self.min_df = min_df
        self.top_k = top_k
        self.vocab: Vocabulary | None = None
        self.surface_mean: np.ndarray | None = None
        self.surface_std: np.ndarray | None = None
        self.selected: list[int] | None = None

    def _surface(self, doc: ArgumentDoc, tokens: Sequence[str]) -> np.ndarray:
        return np.asarray([char_length(doc), doc.word_count, type_token_ratio(tokens)], dtype=float)

    def _full_vector(self, doc: ArgumentDoc, tokens: Sequence[str]) -> FeatureVector:
        assert self.vocab is not None and self.surface_mean is not None
        base = transform_tfidf(self.vocab, tokens)
        entries = dict(base.entries)
        surface = (self._surface(doc, tokens) - self.surface_mean) / self.surface_std
        for offset, value in enumerate(surface):
            if value != 0.0:
                entries[len(self.vocab) + offset] = float(value)
        return FeatureVector(entries=entries, dimension=len(self.vocab) + 3)

    def fit(self, docs: Sequence[ArgumentDoc], y: Sequence[float]) -> "WachsmuthFeaturizer":
        if len(docs) != len(y):
            raise ValueError("docs and targets must align")
        token_lists = [tokenize(doc.text) for doc in docs]
        self.vocab = fit_tfidf(token_lists, self.ngram_range, self.min_df)
        surface = np.stack([self._surface(doc, toks) for doc, toks in zip(docs, token_lists)])
        self.surface_mean = surface.mean(axis=0)
        std = surface.std(axis=0)
        std[std == 0] = 1.0
        self.surface_std = std
        full = [self._full_vector(doc, toks) for doc, toks in zip(docs, token_lists)]
        self.selected = cfs_select(full, y, self.top_k)
        return self

    def transform(self, docs: Sequence[ArgumentDoc]) -> list[FeatureVector]:
        if self.selected is None:
            raise ValueError("featurizer is not fitted")
        remap = {old: new for new, old in enumerate(self.selected)}
        out = []
        for doc in docs:
            tokens = tokenize(doc.text)
            full = self._full_vector(doc, tokens)
            entries = {remap[i]: v for i, v in full.entries.items() if i in remap}
            out.append(FeatureVector(entries=entries, dimension=len(self.selected)))
        return out


def write_representations(vectors: dict[str, np.ndarray], path: str | Path) -> None:
    """Write per-document vectors as JSON-lines ``{"id": ..., "vec": [...]}``."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(vectors):
            vec = [float(v) for v in vectors[doc_id]]
            fh.write(json.dumps({"id": doc_id, "vec": vec}) + "\n")


def load_representations(path: str | Path) -> dict[str, np.ndarray]:
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if "id" not in record or "vec" not in record:
                raise ValueError(f"{path}: line {lineno}: expected keys 'id' and 'vec'")
            vectors[record["id"]] = np.asarray(record["vec"], dtype=float)
    return vectors
