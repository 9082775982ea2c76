"""Epsilon-insensitive support vector regression with an SMO dual solver.

The hot loop lives in a compiled extension (``_smo_cy``) when it has been
built; otherwise the numpy implementation of the same algorithm is used.
``active_backend()`` reports which one is in effect and ``solver_backend()``
fetches either by name (the benchmark and the equivalence tests use both).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from ..features import FeatureVector, to_csr
from . import _smo as _py_backend

try:
    from . import _smo_cy as _cy_backend

    _backend = _cy_backend
    _BACKEND_NAME = "cython"
except ImportError:
    _cy_backend = None
    _backend = _py_backend
    _BACKEND_NAME = "python"

MODEL_FORMAT_VERSION = 1


def active_backend() -> str:
    return _BACKEND_NAME


def solver_backend(name: str):
    """Return the solver module for ``name`` ("python" or "cython")."""
    if name == "python":
        return _py_backend
    if name == "cython":
        if _cy_backend is None:
            raise ValueError("the compiled backend is not built in this environment")
        return _cy_backend
    raise ValueError(f"unknown backend {name!r}")


class DimensionMismatch(ValueError):
    pass


@dataclass
class SvrModel:
    """Fitted model; ``beta`` are the dual coefficients per training point.

    Invariants: |beta_i| <= C and sum(beta) == 0 within 1e-8.  Linear models
    carry the primal weight vector, which makes prediction independent of the
    training set; RBF models keep their support vectors.
    """

    kernel: str                       # "linear" | "rbf"
    c: float
    epsilon: float
    gamma: float | None
    bias: float
    beta: np.ndarray
    n_features: int
    converged: bool
    n_iter: int
    dual_objective: float
    weights: np.ndarray | None = None             # linear kernel only
    support_vectors: np.ndarray | None = None      # rbf: dense (n_sv, d)
    support_coefs: np.ndarray | None = None        # rbf: (n_sv,)
    objective_history: np.ndarray | None = None


def _as_matrix(X) -> tuple[sparse.csr_matrix | np.ndarray, int]:
    if isinstance(X, np.ndarray):
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        return np.asarray(X, dtype=np.float64), X.shape[1]
    if sparse.issparse(X):
        return X.tocsr(), X.shape[1]
    X = list(X)
    if X and isinstance(X[0], FeatureVector):
        matrix = to_csr(X)
        return matrix, matrix.shape[1]
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr, arr.shape[1]


def _data_variance(X) -> float:
    if sparse.issparse(X):
        n_entries = X.shape[0] * X.shape[1]
        total = X.sum()
        total_sq = X.multiply(X).sum()
        return float(total_sq / n_entries - (total / n_entries) ** 2)
    return float(np.asarray(X).var())


def _gram(X) -> np.ndarray:
    if sparse.issparse(X):
        return np.asarray((X @ X.T).todense(), dtype=np.float64)
    X = np.asarray(X)
    return X @ X.T


def _rbf_from_gram(gram: np.ndarray, sq_norms_a, sq_norms_b, gamma: float) -> np.ndarray:
    d2 = sq_norms_a[:, None] + sq_norms_b[None, :] - 2.0 * gram
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def _sq_norms(X) -> np.ndarray:
    if sparse.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    X = np.asarray(X)
    return (X * X).sum(axis=1)


def svr_fit(
    X,
    y: Sequence[float],
    c: float = 1.0,
    epsilon: float = 0.1,
    kernel: str = "rbf",
    gamma: float | None = None,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    record_objective: bool = False,
    backend: str | None = None,
) -> SvrModel:
    """Fit epsilon-SVR; a model that hit ``max_iter`` is returned flagged
    ``converged=False`` rather than raised.

    The full kernel matrix is materialized (O(n^2) memory), which is fine at
    corpus scale; sparse feature inputs stay sparse until that point.
    """
    if c <= 0:
        raise ValueError(f"C must be positive, got {c}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    if kernel not in ("linear", "rbf"):
        raise ValueError(f"unknown kernel {kernel!r}")
    matrix, n_features = _as_matrix(X)
    y_arr = np.asarray(list(y), dtype=np.float64)
    n = matrix.shape[0]
    if n != len(y_arr) or n < 1:
        raise DimensionMismatch(f"{n} rows against {len(y_arr)} targets")

    if kernel == "rbf" and gamma is None:
        var = _data_variance(matrix)
        gamma = 1.0 / (n_features * var) if var > 0 else 1.0
    if kernel == "linear":
        gamma = None

    gram = _gram(matrix)
    if kernel == "rbf":
        sq = _sq_norms(matrix)
        K = _rbf_from_gram(gram, sq, sq, gamma)
    else:
        K = gram

    solver = solver_backend(backend) if backend else _backend
    beta, bias, n_iter, converged, dual, hist = solver.solve(
        K, y_arr, float(c), float(epsilon), float(tol), int(max_iter),
        record_objective=record_objective,
    )

    model = SvrModel(
        kernel=kernel,
        c=float(c),
        epsilon=float(epsilon),
        gamma=gamma,
        bias=bias,
        beta=beta,
        n_features=n_features,
        converged=converged,
        n_iter=n_iter,
        dual_objective=dual,
        objective_history=hist,
    )
    if kernel == "linear":
        if sparse.issparse(matrix):
            model.weights = np.asarray(matrix.T @ beta).ravel()
        else:
            model.weights = matrix.T @ beta
    else:
        support = np.abs(beta) > 0
        rows = matrix[support]
        model.support_vectors = np.asarray(rows.todense()) if sparse.issparse(rows) else np.asarray(rows)
        model.support_coefs = beta[support]
    return model


def _vector_to_dense(x, n_features: int) -> np.ndarray:
    if isinstance(x, FeatureVector):
        if x.dimension != n_features:
            raise DimensionMismatch(f"vector dimension {x.dimension} != model {n_features}")
        return x.to_dense()
    arr = np.asarray(x, dtype=np.float64).ravel()
    if len(arr) != n_features:
        raise DimensionMismatch(f"vector length {len(arr)} != model {n_features}")
    return arr


def svr_predict(model: SvrModel, x) -> float:
    """Decision value sum_i beta_i K(x_i, x) + b (primal form when linear)."""
    dense = _vector_to_dense(x, model.n_features)
    if model.kernel == "linear":
        return float(model.weights @ dense + model.bias)
    d2 = ((model.support_vectors - dense) ** 2).sum(axis=1)
    return float(model.support_coefs @ np.exp(-model.gamma * d2) + model.bias)


def predict_many(model: SvrModel, X) -> np.ndarray:
    matrix, n_features = _as_matrix(X)
    if n_features != model.n_features:
        raise DimensionMismatch(f"matrix has {n_features} features, model {model.n_features}")
    if model.kernel == "linear":
        out = matrix @ model.weights
        out = np.asarray(out).ravel()
        return out + model.bias
    if model.support_coefs is None or len(model.support_coefs) == 0:
        return np.full(matrix.shape[0], model.bias)
    gram = (
        np.asarray((matrix @ sparse.csr_matrix(model.support_vectors).T).todense())
        if sparse.issparse(matrix)
        else np.asarray(matrix) @ model.support_vectors.T
    )
    K = _rbf_from_gram(gram, _sq_norms(matrix), _sq_norms(model.support_vectors), model.gamma)
    return K @ model.support_coefs + model.bias


def eps_loss(model: SvrModel, X, y: Sequence[float]) -> float:
    """Mean epsilon-insensitive residual: max(0, |f(x) - y| - epsilon)."""
    preds = predict_many(model, X)
    y_arr = np.asarray(list(y), dtype=np.float64)
    if len(preds) != len(y_arr):
        raise DimensionMismatch(f"{len(preds)} predictions against {len(y_arr)} targets")
    return float(np.maximum(np.abs(preds - y_arr) - model.epsilon, 0.0).mean())


def model_to_dict(model: SvrModel) -> dict:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "svr",
        "kernel": model.kernel,
        "c": model.c,
        "epsilon": model.epsilon,
        "gamma": model.gamma,
        "bias": model.bias,
        "n_features": model.n_features,
        "converged": model.converged,
        "n_iter": model.n_iter,
        "dual_objective": model.dual_objective,
        "beta": [float(b) for b in model.beta],
    }
    if model.kernel == "linear":
        payload["weights"] = [float(w) for w in model.weights]
    else:
        payload["support_vectors"] = [[float(v) for v in row] for row in model.support_vectors]
        payload["support_coefs"] = [float(v) for v in model.support_coefs]
    return payload


def save_model(model: SvrModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)


def load_model(path: str | Path) -> SvrModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "svr" or payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{MODEL_FORMAT_VERSION} svr model file")
    model = SvrModel(
        kernel=payload["kernel"],
        c=payload["c"],
        epsilon=payload["epsilon"],
        gamma=payload["gamma"],
        bias=payload["bias"],
        beta=np.asarray(payload["beta"], dtype=np.float64),
        n_features=payload["n_features"],
        converged=payload["converged"],
        n_iter=payload["n_iter"],
        dual_objective=payload["dual_objective"],
    )
    if model.kernel == "linear":
        model.weights = np.asarray(payload["weights"], dtype=np.float64)
    else:
        model.support_vectors = np.asarray(payload["support_vectors"], dtype=np.float64)
        if model.support_vectors.size == 0:
            model.support_vectors = model.support_vectors.reshape(0, model.n_features)
        model.support_coefs = np.asarray(payload["support_coefs"], dtype=np.float64)
    return model
