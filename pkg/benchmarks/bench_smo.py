#!/usr/bin/env python3
"""Benchmark the compiled SMO backend against the numpy fallback.

Times full epsilon-SVR fits (kernel matrix excluded; both backends consume
the same precomputed matrix) over growing problem sizes and checks that the
two backends land on the same solution.

Usage: python benchmarks/bench_smo.py [--sizes 100,300,600] [--repeats 3]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from argquality.svr import active_backend, solver_backend  # noqa: E402


def make_problem(n: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 8))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + 0.1 * rng.normal(size=n)
    sq = (X * X).sum(axis=1)
    gamma = 1.0 / (8 * X.var())
    K = np.exp(-gamma * (sq[:, None] + sq[None, :] - 2 * X @ X.T))
    return np.ascontiguousarray(K), y


def time_backend(name: str, K, y, repeats: int):
    solver = solver_backend(name)
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = solver.solve(K, y, 1.0, 0.05, tol=1e-4, max_iter=200_000)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="100,200,400,800")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = ["python"]
    try:
        solver_backend("cython")
        backends.append("cython")
    except ValueError:
        print("compiled backend not built; run `python setup.py build_ext --inplace`")
    print(f"active backend at import: {active_backend()}")
    print(f"{'n':>6} " + " ".join(f"{b:>12}" for b in backends) + f" {'speedup':>9}")

    for n in (int(s) for s in args.sizes.split(",")):
        K, y = make_problem(n, seed=n)
        times = {}
        results = {}
        for backend in backends:
            times[backend], results[backend] = time_backend(backend, K, y, args.repeats)
        if len(backends) == 2:
            py, cy = results["python"], results["cython"]
            assert py[2] == cy[2], "iteration counts diverge"
            assert abs(py[4] - cy[4]) < 1e-8, "objectives diverge"
            speedup = f"{times['python'] / times['cython']:9.1f}x"
        else:
            speedup = "        -"
        row = " ".join(f"{times[b] * 1e3:10.1f}ms" for b in backends)
        print(f"{n:>6} {row} {speedup}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
