# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled SMO solver for the epsilon-SVR dual.

Same algorithm as ``_smo.py`` (the numpy fallback): LIBSVM-style
maximal-violating-pair selection over the 2n box variables, identical pair
update and bias rule.  Any change here must be mirrored there.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double _TAU = 1e-12
cdef double _INF = float("inf")


def solve(
    K,
    y,
    double c,
    double epsilon,
    double tol=1e-3,
    long max_iter=100_000,
    bint record_objective=False,
    on_iteration=None,
):
    """Drop-in replacement for ``_smo.solve``; see its docstring."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] K_arr = np.ascontiguousarray(K, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_arr = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = y_arr.shape[0]
    cdef Py_ssize_t m = 2 * n

    cdef cnp.ndarray[cnp.float64_t, ndim=1] alpha_arr = np.zeros(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad_arr = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_arr = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] history_arr = None

    cdef double[:, ::1] Kv = K_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr
    cdef double[::1] p = p_arr
    cdef double[::1] history = None

    cdef bint record = record_objective or on_iteration is not None
    if record:
        history_arr = np.empty(max_iter)
        history = history_arr

    cdef Py_ssize_t t, i, j, pi, pj, pt
    cdef double st, si, sj, score_t, best_up, best_low
    cdef double quad, delta, diff, total, old_i, old_j, delta_i, delta_j
    cdef double objective, acc
    cdef long n_iter = 0
    cdef bint converged = False

    for t in range(n):
        p[t] = epsilon - y_arr[t]
        p[n + t] = epsilon + y_arr[t]
        grad[t] = p[t]
        grad[n + t] = p[n + t]

    while n_iter < max_iter:
        # Working-set selection: max score over "up", min over "low".
        best_up = -_INF
        best_low = _INF
        i = -1
        j = -1
        for t in range(m):
            st = 1.0 if t < n else -1.0
            score_t = -st * grad[t]
            if (st > 0.0 and alpha[t] < c) or (st < 0.0 and alpha[t] > 0.0):
                if score_t > best_up:
                    best_up = score_t
                    i = t
            if (st > 0.0 and alpha[t] > 0.0) or (st < 0.0 and alpha[t] < c):
                if score_t < best_low:
                    best_low = score_t
                    j = t
        if i < 0 or j < 0 or best_up - best_low <= tol:
            converged = True
            break

        si = 1.0 if i < n else -1.0
        sj = 1.0 if j < n else -1.0
        pi = i if i < n else i - n
        pj = j if j < n else j - n
        quad = Kv[pi, pi] + Kv[pj, pj] - 2.0 * Kv[pi, pj]
        if quad <= 0.0:
            quad = _TAU
        old_i = alpha[i]
        old_j = alpha[j]
        if si != sj:
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
        for t in range(m):
            st = 1.0 if t < n else -1.0
            pt = t if t < n else t - n
            grad[t] += st * (si * delta_i * Kv[pi, pt] + sj * delta_j * Kv[pj, pt])

        if record:
            acc = 0.0
            for t in range(m):
                acc += alpha[t] * (grad[t] + p[t])
            objective = -0.5 * acc
            history[n_iter] = objective
            if on_iteration is not None:
                on_iteration(alpha_arr.copy(), objective)
        n_iter += 1

    # Bias from free variables when any exist, else the KKT midpoint.
    cdef double free_sum = 0.0
    cdef Py_ssize_t free_count = 0
    best_up = -_INF
    best_low = _INF
    for t in range(m):
        st = 1.0 if t < n else -1.0
        score_t = -st * grad[t]
        if alpha[t] > 0.0 and alpha[t] < c:
            free_sum += score_t
            free_count += 1
        if (st > 0.0 and alpha[t] < c) or (st < 0.0 and alpha[t] > 0.0):
            if score_t > best_up:
                best_up = score_t
        if (st > 0.0 and alpha[t] > 0.0) or (st < 0.0 and alpha[t] < c):
            if score_t < best_low:
                best_low = score_t
    cdef double bias
    if free_count > 0:
        bias = free_sum / free_count
    elif best_up > -_INF and best_low < _INF:
        bias = (best_up + best_low) / 2.0
    else:
        bias = 0.0

    acc = 0.0
    for t in range(m):
        acc += alpha[t] * (grad[t] + p[t])
    cdef double dual_objective = -0.5 * acc

    beta = alpha_arr[:n] - alpha_arr[n:]
    objective_history = history_arr[:n_iter].copy() if record_objective and history_arr is not None else None
    return beta, bias, n_iter, converged, dual_objective, objective_history
