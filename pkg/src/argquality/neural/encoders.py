"""Document encoders feeding the regression heads.

Three variants share one interface: a frozen mean-of-embeddings encoder, a
frozen per-document vector lookup (the file boundary for externally computed
contextual representations), and a trainable tanh projection stacked on
either of those.  ``encode`` maps a batch of base input vectors (n, d) to
hidden representations (n, H); only the projection has parameters.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..corpus import ArgumentDoc
from ..features import EmbeddingTable, embed_average, tokenize


class MissingRepresentationError(KeyError):
    pass


class MeanEmbeddingEncoder:
    """Frozen encoder: hidden state = average of word embeddings."""

    kind = "mean_embedding"
    trainable = False

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.input_dim = table.dim
        self.hidden_dim = table.dim

    def doc_vector(self, doc: ArgumentDoc) -> np.ndarray:
        vec, _ = embed_average(tokenize(doc.text), self.table)
        return vec

    def encode(self, X: np.ndarray) -> np.ndarray:
        return X

    def encode_with_cache(self, X: np.ndarray):
        return X, None

    def backprop(self, cache, d_hidden: np.ndarray) -> dict[str, np.ndarray]:
        return {}

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def copy(self) -> "MeanEmbeddingEncoder":
        return MeanEmbeddingEncoder(self.table)


class PrecomputedEncoder:
    """Frozen encoder reading one vector per document id from a mapping."""

    kind = "precomputed"
    trainable = False

    def __init__(self, vectors: Mapping[str, np.ndarray]):
        if not vectors:
            raise ValueError("no precomputed representations given")
        self.vectors = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}
        dims = {len(v) for v in self.vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent representation dimensions: {sorted(dims)}")
        self.input_dim = dims.pop()
        self.hidden_dim = self.input_dim

    def doc_vector(self, doc: ArgumentDoc) -> np.ndarray:
        try:
            return self.vectors[doc.id]
        except KeyError:
            raise MissingRepresentationError(f"no representation for doc {doc.id!r}") from None

    def encode(self, X: np.ndarray) -> np.ndarray:
        return X

    def encode_with_cache(self, X: np.ndarray):
        return X, None

    def backprop(self, cache, d_hidden: np.ndarray) -> dict[str, np.ndarray]:
        return {}

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def copy(self) -> "PrecomputedEncoder":
        return PrecomputedEncoder(self.vectors)


class ProjectionEncoder:
    """Trainable encoder: hidden = tanh(A x + c) over a frozen base encoder.

    ``A`` is initialized from a seeded uniform(-1/sqrt(d), 1/sqrt(d)) and
    ``c`` from zeros, so training is deterministic given the seed.
    """

    kind = "projection"
    trainable = True

    def __init__(
        self,
        base: MeanEmbeddingEncoder | PrecomputedEncoder,
        hidden_dim: int,
        seed: int = 0,
        weights: np.ndarray | None = None,
        offset: np.ndarray | None = None,
    ):
        self.base = base
        self.input_dim = base.input_dim
        self.hidden_dim = hidden_dim
        if weights is not None:
            self.weights = np.asarray(weights, dtype=float).copy()
            self.offset = np.asarray(offset, dtype=float).copy()
            if self.weights.shape != (hidden_dim, self.input_dim):
                raise ValueError(
                    f"weights shape {self.weights.shape} != ({hidden_dim}, {self.input_dim})"
                )
        else:
            bound = 1.0 / math.sqrt(self.input_dim)
            rng = np.random.default_rng(seed)
            self.weights = rng.uniform(-bound, bound, size=(hidden_dim, self.input_dim))
            self.offset = np.zeros(hidden_dim)

    def doc_vector(self, doc: ArgumentDoc) -> np.ndarray:
        return self.base.doc_vector(doc)

    def encode(self, X: np.ndarray) -> np.ndarray:
        return np.tanh(X @ self.weights.T + self.offset)

    def encode_with_cache(self, X: np.ndarray):
        hidden = self.encode(X)
        return hidden, (X, hidden)

    def backprop(self, cache, d_hidden: np.ndarray) -> dict[str, np.ndarray]:
        X, hidden = cache
        d_pre = d_hidden * (1.0 - hidden**2)
        return {"encoder.weights": d_pre.T @ X, "encoder.offset": d_pre.sum(axis=0)}

    def params(self) -> dict[str, np.ndarray]:
        return {"encoder.weights": self.weights, "encoder.offset": self.offset}

    def copy(self) -> "ProjectionEncoder":
        return ProjectionEncoder(
            self.base.copy(), self.hidden_dim, weights=self.weights, offset=self.offset
        )


Encoder = MeanEmbeddingEncoder | PrecomputedEncoder | ProjectionEncoder
