"""Optimal and ranked k-best measurement-to-track assignments.

Cost matrices follow the tracker's convention: one row per measurement,
one column per old track, then an m-column diagonal block holding the
"measurement starts its own track" explanations. Forbidden pairs carry +inf
(a true sentinel, never a large finite stand-in).

murty_kbest ranks assignments by partitioning the solution space around each
emitted optimum into subproblems described by (forced, forbidden) arc sets,
each solved lazily with the dense LAP solver.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class CostMatrix:
    """m x (n_old + m) cost matrix. meas_indices / track_ids are optional
    row / old-column labels used to decode assignments."""

    costs: np.ndarray
    meas_indices: tuple[int, ...] = ()
    track_ids: tuple[int, ...] = ()

    def __post_init__(self):
        costs = np.array(self.costs, dtype=float)
        if costs.ndim != 2:
            costs = costs.reshape(0, 0) if costs.size == 0 else np.atleast_2d(costs)
        costs.flags.writeable = False
        object.__setattr__(self, "costs", costs)
        m, n = costs.shape
        if n < m:
            raise ValueError(f"need at least one column per row, got {m}x{n}")
        block = costs[:, n - m :]
        if m and np.any(np.isfinite(block[~np.eye(m, dtype=bool)])):
            raise ValueError("new-track block must be diagonal (+inf off-diagonal)")
        if self.meas_indices and len(self.meas_indices) != m:
            raise ValueError("meas_indices length != number of rows")
        if self.track_ids and len(self.track_ids) != n - m:
            raise ValueError("track_ids length != number of old-track columns")

    @property
    def num_meas(self) -> int:
        return self.costs.shape[0]

    @property
    def num_old(self) -> int:
        return self.costs.shape[1] - self.costs.shape[0]


@dataclass(frozen=True)
class Assignment:
    """Column choice per row plus the summed cost."""

    row_to_col: tuple[int, ...]
    cost: float


def linear_assignment(costs: np.ndarray):
    """Minimum-cost assignment of every row to a distinct column.

    Returns (row_to_col, total) or None when no finite assignment exists.
    """
    try:
        rows, cols = linear_sum_assignment(costs)
    except ValueError:
        return None
    total = float(costs[rows, cols].sum())
    if not np.isfinite(total):
        return None
    return tuple(int(c) for c in cols), total


def solve_optimal(c: CostMatrix) -> Assignment:
    """Minimum-cost assignment; always feasible thanks to the diagonal block."""
    sol = linear_assignment(c.costs)
    if sol is None:
        raise ValueError("cost matrix admits no finite assignment")
    return Assignment(*sol)


def murty_kbest(c: CostMatrix, k: int) -> list[Assignment]:
    """The min(k, feasible count) cheapest assignments, nondecreasing in cost.

    Exact ties are ordered lexicographically by row_to_col.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return ranked_assignments(c.costs, k)


def ranked_assignments(base: np.ndarray, k: int) -> list[Assignment]:
    """murty_kbest on a raw cost array the caller guarantees to be valid."""
    m = base.shape[0]
    if m == 0:
        return [Assignment((), 0.0)]

    heap: list[tuple[float, tuple[int, ...], tuple, frozenset]] = []

    def push(forced: tuple, forbidden: frozenset) -> None:
        masked = base.copy()
        if forbidden:
            rr, cc = zip(*forbidden)
            masked[list(rr), list(cc)] = np.inf
        for r, col in forced:
            keep = masked[r, col]
            masked[r, :] = np.inf
            masked[:, col] = np.inf
            masked[r, col] = keep
        sol = linear_assignment(masked)
        if sol is not None:
            heapq.heappush(heap, (sol[1], sol[0], forced, forbidden))

    push((), frozenset())
    out: list[Assignment] = []
    while heap and len(out) < k:
        cost, cols, forced, forbidden = heapq.heappop(heap)
        out.append(Assignment(cols, cost))
        if len(out) == k:
            break
        # split the popped subproblem's solution space around its optimum:
        # child i forbids the i-th free arc and forces the earlier ones
        forced_rows = {r for r, _ in forced}
        grown = list(forced)
        for r in range(m):
            if r in forced_rows:
                continue
            push(tuple(grown), forbidden | {(r, cols[r])})
            grown.append((r, cols[r]))
    # costs are already nondecreasing; order exact ties lexicographically
    out.sort(key=lambda a: (a.cost, a.row_to_col))
    return out
