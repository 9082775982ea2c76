"""Correlation metrics and prediction-vs-reference evaluation tables.

Undefined correlations (zero variance on either side) are returned as
``None`` and serialized as ``NA`` so degenerate predictions stay visible
instead of collapsing to a numeric zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .corpus import ALL_DIMENSIONS, Dimension


class EvaluationError(Exception):
    pass


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson's r from the definition; None when either variance is zero."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("pearson needs at least two points")
    # Constant columns are undefined; check exactly, because the mean of n
    # identical floats need not round back to that value.
    if min(x) == max(x) or min(y) == max(y):
        return None
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    cov = var_x = var_y = 0.0
    for xi, yi in zip(x, y):
        dx = xi - mean_x
        dy = yi - mean_y
        cov += dx * dy
        var_x += dx * dx
        var_y += dy * dy
    if var_x == 0.0 or var_y == 0.0:
        return None
    return float(cov / math.sqrt(var_x * var_y))


def rankdata(values: Sequence[float]) -> list[float]:
    """Average ranks (1-based); tied values share the mean of their ranks."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = mean_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson over average ranks; ties get their mean rank."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    return pearson(rankdata(x), rankdata(y))


@dataclass
class EvalRow:
    domain: str
    dimension: Dimension
    reference: str
    pearson_r: float | None
    spearman_rho: float | None
    n: int


def evaluate(
    predictions: Mapping[str, Mapping[Dimension, float]],
    references: Mapping[str, Mapping[str, Mapping[Dimension, float]]],
    domain: str,
) -> list[EvalRow]:
    """One row per (dimension x reference source), aligned by id intersection.

    ``references`` maps a source name (e.g. ``mix``) to per-document scores.
    Row order and values are independent of input ordering.  Dimensions that
    either side lacks entirely contribute no row (single-task predictions
    cover one dimension); a dimension both sides carry but share fewer than
    two documents on is an error.
    """
    rows: list[EvalRow] = []
    predicted_dims = {dim for dims in predictions.values() for dim in dims}
    for source in references:
        table = references[source]
        for dim in ALL_DIMENSIONS:
            if dim not in predicted_dims:
                continue
            if not any(dim in dims for dims in table.values()):
                continue
            ids = sorted(
                doc_id
                for doc_id, dims in table.items()
                if dim in dims and doc_id in predictions and dim in predictions[doc_id]
            )
            if len(ids) < 2:
                raise EvaluationError(
                    f"reference {source!r} shares {len(ids)} documents with the "
                    f"predictions for {dim.value}; need at least 2"
                )
            preds = [predictions[doc_id][dim] for doc_id in ids]
            refs = [table[doc_id][dim] for doc_id in ids]
            rows.append(
                EvalRow(
                    domain=domain,
                    dimension=dim,
                    reference=source,
                    pearson_r=pearson(preds, refs),
                    spearman_rho=spearman(preds, refs),
                    n=len(ids),
                )
            )
    return rows


_EVAL_HEADER = ["domain", "dimension", "reference", "pearson", "spearman", "n"]


def write_eval_rows(rows: Iterable[EvalRow], out: str | Path | IO[str]) -> None:
    own = isinstance(out, (str, Path))
    fh = open(out, "w", encoding="utf-8") if own else out
    try:
        fh.write("\t".join(_EVAL_HEADER) + "\n")
        for row in rows:
            fh.write(
                "\t".join(
                    [
                        row.domain,
                        row.dimension.value,
                        row.reference,
                        "NA" if row.pearson_r is None else repr(row.pearson_r),
                        "NA" if row.spearman_rho is None else repr(row.spearman_rho),
                        str(row.n),
                    ]
                )
                + "\n"
            )
    finally:
        if own:
            fh.close()


def read_eval_rows(path: str | Path) -> list[EvalRow]:
    rows: list[EvalRow] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            cells = line.rstrip("\n").split("\t")
            if cells == _EVAL_HEADER:
                continue
            if len(cells) != len(_EVAL_HEADER):
                raise EvaluationError(f"{path}: expected {len(_EVAL_HEADER)} columns")
            rows.append(
                EvalRow(
                    domain=cells[0],
                    dimension=Dimension(cells[1]),
                    reference=cells[2],
                    pearson_r=None if cells[3] == "NA" else float(cells[3]),
                    spearman_rho=None if cells[4] == "NA" else float(cells[4]),
                    n=int(cells[5]),
                )
            )
    return rows
