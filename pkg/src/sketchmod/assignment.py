"""Exact minimum-cost linear assignment.

Two interchangeable backends:

``"scipy"``
    :func:`scipy.optimize.linear_sum_assignment` (compiled shortest
    augmenting path). Default, used at evaluation scale.
``"sap"``
    :func:`shortest_augmenting_path`, a numpy implementation of the same
    Jonker-Volgenant style algorithm kept for cross-checking.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

BACKENDS = ("scipy", "sap")


def shortest_augmenting_path(cost: np.ndarray) -> np.ndarray:
    """Solve a square assignment problem, returning ``col_for_row``.

    One row is inserted per outer iteration by a Dijkstra search over reduced
    costs ``cost[i, j] - u[i] - v[j]``; the duals are updated so reduced costs
    stay non-negative, which keeps every partial assignment optimal.
    O(n^3) worst case; the inner scan over columns is vectorized.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n != m:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    u = np.zeros(n)
    v = np.zeros(n)
    col4row = np.full(n, -1, dtype=np.int64)
    row4col = np.full(n, -1, dtype=np.int64)

    for cur_row in range(n):
        shortest = np.full(n, np.inf)
        path = np.full(n, -1, dtype=np.int64)
        scanned = np.zeros(n, dtype=bool)
        visited_rows = []
        i = cur_row
        min_val = 0.0
        sink = -1
        while sink < 0:
            visited_rows.append(i)
            reduced = min_val + cost[i] - u[i] - v
            better = ~scanned & (reduced < shortest)
            path[better] = i
            shortest[better] = reduced[better]

            masked = np.where(scanned, np.inf, shortest)
            min_val = masked.min()
            ties = np.flatnonzero(masked == min_val)
            # prefer a free column among equally short ones: ends the search early
            free = ties[row4col[ties] < 0]
            j = int(free[0]) if free.size else int(ties[0])
            scanned[j] = True
            if row4col[j] < 0:
                sink = j
            else:
                i = int(row4col[j])

        u[cur_row] += min_val
        for r in visited_rows[1:]:
            u[r] += min_val - shortest[col4row[r]]
        v[scanned] -= min_val - shortest[scanned]

        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur_row:
                break
    return col4row


def solve(cost: np.ndarray, backend: str = "scipy") -> np.ndarray:
    """Return ``col_for_row`` minimizing ``sum(cost[i, col_for_row[i]])``."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if backend == "scipy":
        rows, cols = linear_sum_assignment(cost)
        out = np.empty(len(rows), dtype=np.int64)
        out[rows] = cols
        return out
    if backend == "sap":
        return shortest_augmenting_path(cost)
    raise ValueError(f"unknown assignment backend {backend!r}; choose from {BACKENDS}")
