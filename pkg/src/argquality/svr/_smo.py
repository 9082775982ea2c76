"""Pure numpy SMO solver for the epsilon-SVR dual.

This is the fallback backend; the compiled extension in ``_smo_cy`` runs the
identical algorithm.  Keep the two in lockstep: same working-set rule, same
pair update, same bias rule, so results agree to float rounding.

Formulation: 2n box variables a_t in [0, C] (t < n holds the positive-side
multiplier of point t, t >= n the negative side) with signs s_t = +1/-1 and
the equality constraint sum_t s_t a_t = 0.  Minimize

    f(a) = 1/2 (sum_t s_t a_t phi_t)^2-style quadratic + p . a,
    p = (eps - y, eps + y),

whose negative is the usual dual to be maximized.  The working set is the
maximal-violating pair: argmax over "up" candidates and argmin over "down"
candidates of the score -s_t grad_t; optimality gap is their difference.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

_TAU = 1e-12


def solve(
    K: np.ndarray,
    y: np.ndarray,
    c: float,
    epsilon: float,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    record_objective: bool = False,
    on_iteration: Callable[[np.ndarray, float], None] | None = None,
):
    """Run SMO on a precomputed kernel matrix.

    Returns (beta, bias, n_iter, converged, dual_objective, objective_history)
    where beta are the n dual coefficients (positive minus negative side) and
    dual_objective is the maximization-form value reached.
    ``on_iteration`` receives (alpha copy, dual objective) after every pair
    update; it exists for invariant checks and is too slow for production use.
    """
    n = len(y)
    y = np.asarray(y, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    alpha = np.zeros(2 * n)
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    point = np.concatenate([np.arange(n), np.arange(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    grad = p.copy()

    record = record_objective or on_iteration is not None
    history = np.empty(max_iter) if record else None

    n_iter = 0
    converged = False
    while n_iter < max_iter:
        score = -sign * grad
        up = ((sign > 0) & (alpha < c)) | ((sign < 0) & (alpha > 0))
        low = ((sign > 0) & (alpha > 0)) | ((sign < 0) & (alpha < c))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.where(up, score, -np.inf).argmax())
        j = int(np.where(low, score, np.inf).argmin())
        if score[i] - score[j] <= tol:
            converged = True
            break

        pi, pj = int(point[i]), int(point[j])
        quad = K[pi, pi] + K[pj, pj] - 2.0 * K[pi, pj]
        if quad <= 0.0:
            quad = _TAU
        old_i, old_j = alpha[i], alpha[j]
        if sign[i] != sign[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0.0:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0.0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = total

        delta_i = alpha[i] - old_i
        delta_j = alpha[j] - old_j
        row_i = np.concatenate([K[pi], K[pi]])
        row_j = np.concatenate([K[pj], K[pj]])
        grad += sign * (sign[i] * delta_i * row_i + sign[j] * delta_j * row_j)

        if record:
            objective = -0.5 * float(alpha @ (grad + p))
            history[n_iter] = objective
            if on_iteration is not None:
                on_iteration(alpha.copy(), objective)
        n_iter += 1

    score = -sign * grad
    up = ((sign > 0) & (alpha < c)) | ((sign < 0) & (alpha > 0))
    low = ((sign > 0) & (alpha > 0)) | ((sign < 0) & (alpha < c))
    free = (alpha > 0.0) & (alpha < c)
    if free.any():
        bias = float(score[free].mean())
    elif up.any() and low.any():
        bias = float((score[up].max() + score[low].min()) / 2.0)
    else:
        bias = 0.0

    beta = alpha[:n] - alpha[n:]
    dual_objective = -0.5 * float(alpha @ (grad + p))
    objective_history = history[:n_iter].copy() if record_objective and history is not None else None
    return beta, bias, n_iter, converged, dual_objective, objective_history
