"""Gaussian densities and the linear-Gaussian operations behind the tracker.

Weights live in the log domain throughout the package; combining them goes
through log_sum_exp so that products of many small association factors cannot
underflow. Every covariance produced here is symmetrized before it is
returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

LOG_2PI = math.log(2.0 * math.pi)


def log_sum_exp(log_weights) -> float:
    """log(sum(exp(w_i))) with the usual max shift; -inf for an empty list."""
    arr = np.asarray(log_weights, dtype=float)
    if arr.size == 0:
        return -math.inf
    hi = float(np.max(arr))
    if not math.isfinite(hi):
        # all -inf, or a +inf dominates; either way the max is the answer
        return hi
    return hi + math.log(float(np.sum(np.exp(arr - hi))))


def symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Gaussian:
    """Single-target density N(mean, cov). Immutable; arrays are read-only."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(np.atleast_1d(self.mean)))
        object.__setattr__(self, "cov", _frozen(np.atleast_2d(self.cov)))
        n = self.mean.shape[0]
        if self.mean.ndim != 1 or self.cov.shape != (n, n):
            raise ValueError(
                f"inconsistent Gaussian dimensions: mean {self.mean.shape}, "
                f"cov {self.cov.shape}"
            )

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class WeightedGaussian:
    """Gaussian with a log-domain weight; -inf encodes an exact zero weight."""

    log_weight: float
    gaussian: Gaussian

    def __post_init__(self):
        lw = float(self.log_weight)
        if math.isnan(lw) or lw == math.inf:
            raise ValueError(f"log_weight must be finite or -inf, got {lw}")
        object.__setattr__(self, "log_weight", lw)


@dataclass(frozen=True)
class GaussianMixture:
    """Ordered, possibly empty, list of weighted Gaussians (an intensity)."""

    components: tuple[WeightedGaussian, ...] = ()

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        dims = {wg.gaussian.dim for wg in comps}
        if len(dims) > 1:
            raise ValueError(f"mixed component dimensions: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def log_weights(self) -> np.ndarray:
        return np.array([wg.log_weight for wg in self.components], dtype=float)

    def total_weight(self) -> float:
        """Linear-domain total mass (the expected target count for an intensity)."""
        return float(np.exp(self.log_weights()).sum()) if self.components else 0.0

    def scaled(self, log_factor: float) -> "GaussianMixture":
        return GaussianMixture(
            tuple(
                WeightedGaussian(wg.log_weight + log_factor, wg.gaussian)
                for wg in self.components
            )
        )


@dataclass(frozen=True)
class LinearGaussianModel:
    """Constant-parameter linear model: dynamics, measurement, detection,
    clutter, and the birth intensity."""

    F: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    R: np.ndarray
    p_s: float
    p_d: float
    clutter_rate: float
    clutter_density: float
    birth: GaussianMixture

    def __post_init__(self):
        for name in ("F", "Q", "H", "R"):
            object.__setattr__(self, name, _frozen(np.atleast_2d(getattr(self, name))))
        n_x = self.F.shape[0]
        n_z = self.H.shape[0]
        if self.F.shape != (n_x, n_x) or self.Q.shape != (n_x, n_x):
            raise ValueError(f"bad dynamics shapes: F {self.F.shape}, Q {self.Q.shape}")
        if self.H.shape[1] != n_x or self.R.shape != (n_z, n_z):
            raise ValueError(f"bad measurement shapes: H {self.H.shape}, R {self.R.shape}")
        if not 0.0 <= self.p_s <= 1.0:
            raise ValueError(f"p_s outside [0,1]: {self.p_s}")
        if not 0.0 <= self.p_d <= 1.0:
            raise ValueError(f"p_d outside [0,1]: {self.p_d}")
        if self.clutter_rate < 0.0 or self.clutter_density < 0.0:
            raise ValueError("clutter_rate and clutter_density must be >= 0")

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]

    @property
    def meas_dim(self) -> int:
        return self.H.shape[0]

    @property
    def log_p_d(self) -> float:
        return math.log(self.p_d) if self.p_d > 0.0 else -math.inf

    @property
    def log_q_d(self) -> float:
        """log(1 - p_d)."""
        return math.log1p(-self.p_d) if self.p_d < 1.0 else -math.inf

    @property
    def log_clutter_density(self) -> float:
        return math.log(self.clutter_density) if self.clutter_density > 0.0 else -math.inf


def kalman_predict(g: Gaussian, F, Q) -> Gaussian:
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if F.shape[1] != g.dim:
        raise ValueError(f"F {F.shape} does not act on state of dim {g.dim}")
    return Gaussian(F @ g.mean, symmetrize(F @ g.cov @ F.T + Q))


def innovation(g: Gaussian, H, R) -> tuple[np.ndarray, np.ndarray]:
    """Predicted measurement H·mean and innovation covariance S = H·P·Hᵀ + R."""
    H = np.asarray(H, dtype=float)
    R = np.asarray(R, dtype=float)
    if H.shape[1] != g.dim:
        raise ValueError(f"H {H.shape} does not act on state of dim {g.dim}")
    return H @ g.mean, symmetrize(H @ g.cov @ H.T + R)


def _cholesky(s: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError(
            f"innovation covariance not positive definite "
            f"(cond={np.linalg.cond(s):.3e})"
        ) from err


def kalman_update(g: Gaussian, z, H, R) -> tuple[Gaussian, float]:
    """Posterior density and log N(z; H·mean, S) for a single measurement."""
    z = np.asarray(z, dtype=float)
    z_pred, s = innovation(g, H, R)
    if z.shape != z_pred.shape:
        raise ValueError(f"measurement shape {z.shape} != predicted {z_pred.shape}")
    chol = _cholesky(s)
    nu = z - z_pred
    alpha = sla.solve_triangular(chol, nu, lower=True)
    log_lik = (
        -0.5 * (z.size * LOG_2PI + float(alpha @ alpha))
        - float(np.log(np.diag(chol)).sum())
    )
    gain = sla.cho_solve((chol, True), (g.cov @ np.asarray(H, float).T).T).T
    mean = g.mean + gain @ nu
    cov = symmetrize(g.cov - gain @ s @ gain.T)
    return Gaussian(mean, cov), log_lik


def gate(z, g: Gaussian, H, R, threshold: float) -> bool:
    """Ellipsoidal gate on the squared Mahalanobis innovation distance."""
    if threshold <= 0.0:
        raise ValueError(f"gate threshold must be > 0, got {threshold}")
    if math.isinf(threshold):
        return True
    z = np.asarray(z, dtype=float)
    z_pred, s = innovation(g, H, R)
    alpha = sla.solve_triangular(_cholesky(s), z - z_pred, lower=True)
    return float(alpha @ alpha) <= threshold


def mahalanobis_batch(g: Gaussian, Z: np.ndarray, H, R) -> np.ndarray:
    """Squared Mahalanobis innovation distances for a (k, meas_dim) batch."""
    Z = np.asarray(Z, dtype=float)
    z_pred, s = innovation(g, H, R)
    if Z.ndim != 2 or Z.shape[1] != z_pred.size:
        raise ValueError(f"batch shape {Z.shape} != (k, {z_pred.size})")
    alpha = sla.solve_triangular(_cholesky(s), (Z - z_pred).T, lower=True)
    return np.sum(alpha * alpha, axis=0)


def kalman_update_batch(g: Gaussian, Z, H, R):
    """Kalman update against every row of Z at once, sharing the single
    innovation factorization and gain.

    Returns (means (k, state_dim), shared posterior covariance, log
    likelihoods (k,), squared Mahalanobis distances (k,)); the covariance
    does not depend on the measurement value, so one array serves all rows.
    """
    Z = np.asarray(Z, dtype=float)
    z_pred, s = innovation(g, H, R)
    if Z.ndim != 2 or Z.shape[1] != z_pred.size:
        raise ValueError(f"batch shape {Z.shape} != (k, {z_pred.size})")
    chol = _cholesky(s)
    nu = Z - z_pred
    alpha = sla.solve_triangular(chol, nu.T, lower=True, check_finite=False)
    d2 = np.sum(alpha * alpha, axis=0)
    gain = sla.cho_solve(
        (chol, True), (g.cov @ np.asarray(H, float).T).T, check_finite=False
    ).T
    means = g.mean + nu @ gain.T
    cov = symmetrize(g.cov - gain @ s @ gain.T)
    log_det = float(np.log(np.diag(chol)).sum())
    logliks = -0.5 * (z_pred.size * LOG_2PI + d2) - log_det
    return means, cov, logliks, d2


def moment_match(m: GaussianMixture) -> WeightedGaussian:
    """Collapse a mixture to its first two moments; keeps the total weight."""
    if len(m) == 0:
        raise ValueError("cannot moment-match an empty mixture")
    lws = m.log_weights()
    total = log_sum_exp(lws)
    if total == -math.inf:
        raise ValueError("cannot moment-match a zero-weight mixture")
    w = np.exp(lws - total)
    means = np.stack([wg.gaussian.mean for wg in m])
    mean = w @ means
    cov = np.zeros((mean.size, mean.size))
    for wi, wg in zip(w, m):
        d = wg.gaussian.mean - mean
        cov += wi * (wg.gaussian.cov + np.outer(d, d))
    return WeightedGaussian(total, Gaussian(mean, symmetrize(cov)))
