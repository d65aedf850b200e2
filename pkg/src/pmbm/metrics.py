"""OSPA distance and Monte Carlo aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import linear_assignment


@dataclass(frozen=True)
class OspaParams:
    """Order p, cutoff c, and which state indices carry position. None means
    the full vector is the position."""

    p: float = 2.0
    c: float = 10.0
    position_indices: tuple[int, ...] | None = (0, 2)

    def __post_init__(self):
        if self.p < 1.0:
            raise ValueError(f"order must be >= 1, got {self.p}")
        if self.c <= 0.0:
            raise ValueError(f"cutoff must be > 0, got {self.c}")
        if self.position_indices is not None:
            idx = tuple(int(i) for i in self.position_indices)
            if not idx:
                raise ValueError("position_indices cannot be empty")
            object.__setattr__(self, "position_indices", idx)


def _positions(xs, params: OspaParams) -> np.ndarray:
    arr = np.array([np.asarray(x, float).ravel() for x in xs])
    if params.position_indices is None:
        return arr
    return arr[:, list(params.position_indices)]


def ospa(X, Y, params: OspaParams) -> float:
    """Optimal subpattern assignment distance between two unordered sets of
    vectors: cutoff-capped matching cost plus c per cardinality mismatch,
    p-norm averaged over the larger set."""
    n_x, n_y = len(X), len(Y)
    if n_x == 0 and n_y == 0:
        return 0.0
    if n_x == 0 or n_y == 0:
        return params.c
    if n_x > n_y:
        X, Y = Y, X
        n_x, n_y = n_y, n_x
    px = _positions(X, params)
    py = _positions(Y, params)
    dists = np.linalg.norm(px[:, None, :] - py[None, :, :], axis=2)
    costs = np.minimum(dists, params.c) ** params.p
    sol = linear_assignment(costs)
    assert sol is not None  # finite matrix, n_x <= n_y
    total = sol[1] + (params.c ** params.p) * (n_y - n_x)
    return float((total / n_y) ** (1.0 / params.p))


def rms_aggregate(values) -> tuple[np.ndarray, float]:
    """Per-step RMS curve and the grand RMS over a (runs, steps) grid."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty value grid")
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a (runs, steps) grid, got shape {arr.shape}")
    curve = np.sqrt(np.mean(arr * arr, axis=0))
    scalar = float(np.sqrt(np.mean(arr * arr)))
    return curve, scalar
