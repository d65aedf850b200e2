"""Brute-force reference implementations used only in tests.

Everything here trades efficiency for transparency: plain linear-domain
arithmetic, explicit enumeration of every association, and a private normal
pdf and Kalman step so the code under test shares nothing with this module
beyond the Gaussian containers. Sizes are expected to stay tiny (a handful
of targets and measurements); nothing is vectorized on purpose.

likelihood_direct and likelihood_decomposed evaluate the same multi-object
likelihood by enumerating in opposite directions (per-target measurement
choice vs per-measurement source choice). likelihood_blocks evaluates the
block form used by the filter, where each measurement is owed either to the
undetected-plus-clutter part or to one Bernoulli component. brute_posterior
enumerates every association event of a tiny prior and returns exact
normalized weights, per-component posteriors, and the log evidence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import Gaussian, GaussianMixture, LinearGaussianModel

POISSON_PART = -1


def _normal_pdf(z, mean, cov) -> float:
    z = np.asarray(z, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = z - mean
    k = d.size
    det = np.linalg.det(cov)
    quad = float(d @ np.linalg.solve(cov, d))
    return math.exp(-0.5 * quad) / math.sqrt(((2.0 * math.pi) ** k) * det)


def _predicted_meas(g: Gaussian, m: LinearGaussianModel):
    s = m.H @ g.cov @ m.H.T + m.R
    return m.H @ g.mean, 0.5 * (s + s.T)


def _kalman(g: Gaussian, z, m: LinearGaussianModel):
    """Naive textbook Kalman update, returning (posterior, N(z; Hx, S))."""
    z_pred, s = _predicted_meas(g, m)
    gain = g.cov @ m.H.T @ np.linalg.inv(s)
    mean = g.mean + gain @ (np.asarray(z, float) - z_pred)
    cov = g.cov - gain @ s @ gain.T
    return Gaussian(mean, 0.5 * (cov + cov.T)), _normal_pdf(z, z_pred, s)


def likelihood_direct(Z, X, m: LinearGaussianModel) -> float:
    """Multi-object likelihood of measurements Z given target states X.

    Enumerates, for every target, the choice of generating one measurement
    or none (choices injective over targets); measurements claimed by no
    target are clutter.
    """
    Z = [np.asarray(z, float) for z in Z]
    X = [np.asarray(x, float) for x in X]
    total = 0.0
    for choice in itertools.product([None, *range(len(Z))], repeat=len(X)):
        picked = [c for c in choice if c is not None]
        if len(picked) != len(set(picked)):
            continue
        term = 1.0
        for x, c in zip(X, choice):
            if c is None:
                term *= 1.0 - m.p_d
            else:
                term *= m.p_d * _normal_pdf(Z[c], m.H @ x, m.R)
        for p in range(len(Z)):
            if p not in picked:
                term *= m.clutter_density
        total += term
    return math.exp(-m.clutter_rate) * total


def likelihood_decomposed(Z, X, m: LinearGaussianModel) -> float:
    """Same likelihood as likelihood_direct, enumerated the other way round:
    every measurement picks a source target or clutter (injectively), and
    unclaimed targets are undetected."""
    Z = [np.asarray(z, float) for z in Z]
    X = [np.asarray(x, float) for x in X]
    total = 0.0
    for choice in itertools.product([None, *range(len(X))], repeat=len(Z)):
        picked = [c for c in choice if c is not None]
        if len(picked) != len(set(picked)):
            continue
        term = 1.0
        for z, c in zip(Z, choice):
            if c is None:
                term *= m.clutter_density
            else:
                term *= m.p_d * _normal_pdf(z, m.H @ X[c], m.R)
        for i in range(len(X)):
            if i not in picked:
                term *= 1.0 - m.p_d
        total += term
    return math.exp(-m.clutter_rate) * total


def _poisson_part_likelihood(Z, poisson: GaussianMixture, m: LinearGaussianModel) -> float:
    """Likelihood of Z under the superposition of clutter and detections of
    Poisson-distributed targets: a Poisson process with intensity
    c(z) + p_d * sum_q w_q N(z; H mu_q, S_q)."""
    mu = sum(math.exp(wg.log_weight) for wg in poisson)
    term = math.exp(-m.clutter_rate - m.p_d * mu)
    for z in Z:
        intensity = m.clutter_density
        for wg in poisson:
            z_pred, s = _predicted_meas(wg.gaussian, m)
            intensity += (
                math.exp(wg.log_weight) * m.p_d * _normal_pdf(z, z_pred, s)
            )
        term *= intensity
    return term


def likelihood_blocks(Z, bernoullis, poisson: GaussianMixture, m: LinearGaussianModel) -> float:
    """Likelihood in block form: each measurement is produced either by the
    undetected-plus-clutter part or by one of the Bernoulli components (at
    most one measurement per component).

    Block cells integrate over the component: an empty cell contributes
    1 - r*p_d, a singleton cell r*p_d*N(z; H mu, S). Deterministic targets
    are the special case r=1 with zero covariance.
    """
    Z = [np.asarray(z, float) for z in Z]
    bernoullis = list(bernoullis)
    total = 0.0
    for choice in itertools.product(
        [POISSON_PART, *range(len(bernoullis))], repeat=len(Z)
    ):
        blocks = [c for c in choice if c != POISSON_PART]
        if len(blocks) != len(set(blocks)):
            continue
        z_pois = [z for z, c in zip(Z, choice) if c == POISSON_PART]
        term = _poisson_part_likelihood(z_pois, poisson, m)
        for i, b in enumerate(bernoullis):
            assigned = [z for z, c in zip(Z, choice) if c == i]
            if not assigned:
                term *= 1.0 - b.r * m.p_d
            else:
                z_pred, s = _predicted_meas(b.density, m)
                term *= b.r * m.p_d * _normal_pdf(assigned[0], z_pred, s)
        total += term
    return total


@dataclass(frozen=True)
class TinyBernoulli:
    """One prior single-target hypothesis: linear weight, existence, density."""

    weight: float
    r: float
    density: Gaussian


@dataclass(frozen=True)
class TinyInstance:
    """A prior small enough to enumerate exhaustively.

    bernoullis[i] lists the hypotheses of track i; the implied prior global
    hypotheses are all cross-track selections, weighted by the normalized
    product of the per-hypothesis weights. A hypothesis with r=0 stands for
    the track not existing under that selection.
    """

    poisson: GaussianMixture
    bernoullis: tuple[tuple[TinyBernoulli, ...], ...]
    measurements: tuple[np.ndarray, ...]
    model: LinearGaussianModel

    def __post_init__(self):
        object.__setattr__(
            self,
            "measurements",
            tuple(np.asarray(z, float) for z in self.measurements),
        )
        object.__setattr__(
            self, "bernoullis", tuple(tuple(hs) for hs in self.bernoullis)
        )
        for hs in self.bernoullis:
            if not hs:
                raise ValueError("every track needs at least one hypothesis")


@dataclass(frozen=True, eq=False)
class AssociationEvent:
    """One exhaustively enumerated posterior global hypothesis.

    parent: prior hypothesis index per track. assignments: per track, None
    when the parent hypothesis has r=0 (track absent), -1 for a
    misdetection, else the assigned measurement index. new_track_meas:
    measurements explained by the first-detection-or-clutter route.
    posteriors: (r, mean, cov) per track, aligned with assignments (None for
    absent tracks). new_posteriors: (meas index, r, mean, cov) per entry of
    new_track_meas, ordered by measurement index.
    """

    weight: float
    parent: tuple[int, ...]
    assignments: tuple[int | None, ...]
    new_track_meas: frozenset[int]
    posteriors: tuple = field(default=())
    new_posteriors: tuple = field(default=())

    def key(self):
        return (self.parent, self.assignments, self.new_track_meas)


def _new_track_candidates(t: TinyInstance):
    """Per measurement: (rho, r, mean, cov) of the first-detection update
    against the Poisson intensity, moment-matched over components."""
    m = t.model
    out = []
    for z in t.measurements:
        weights, posts = [], []
        for wg in t.poisson:
            post, lik = _kalman(wg.gaussian, z, m)
            weights.append(math.exp(wg.log_weight) * m.p_d * lik)
            posts.append(post)
        e = sum(weights)
        rho = e + m.clutter_density
        if e > 0.0:
            wn = np.array(weights) / e
            mean = sum(w * p.mean for w, p in zip(wn, posts))
            cov = sum(
                w * (p.cov + np.outer(p.mean - mean, p.mean - mean))
                for w, p in zip(wn, posts)
            )
            r = e / rho
        else:
            mean = np.zeros(m.state_dim)
            cov = np.eye(m.state_dim)
            r = 0.0
        out.append((rho, r, mean, cov))
    return out


def brute_posterior(t: TinyInstance) -> tuple[list[AssociationEvent], float]:
    """Exact posterior of a tiny instance by full enumeration.

    Returns every nonzero-weight association event with normalized weights
    and exact per-component posteriors, plus the log evidence (log density
    of the measurement set given the prior).
    """
    m = t.model
    n_tracks = len(t.bernoullis)
    m_z = len(t.measurements)
    candidates = _new_track_candidates(t)

    track_norm = [sum(b.weight for b in hs) for hs in t.bernoullis]
    events: list[AssociationEvent] = []
    total = 0.0
    for parent in itertools.product(*[range(len(hs)) for hs in t.bernoullis]):
        w_parent = 1.0
        for i, s in enumerate(parent):
            w_parent *= t.bernoullis[i][s].weight / track_norm[i]
        live = [i for i in range(n_tracks) if t.bernoullis[i][parent[i]].r > 0.0]
        for choice in itertools.product([POISSON_PART, *live], repeat=m_z):
            picked = [c for c in choice if c != POISSON_PART]
            if len(picked) != len(set(picked)):
                continue
            w = w_parent
            assignments: list[int | None] = []
            posteriors: list = []
            for i in range(n_tracks):
                b = t.bernoullis[i][parent[i]]
                if b.r <= 0.0:
                    assignments.append(None)
                    posteriors.append(None)
                    continue
                assigned = [p for p in range(m_z) if choice[p] == i]
                if not assigned:
                    rho = 1.0 - b.r * m.p_d
                    w *= rho
                    assignments.append(-1)
                    if rho > 0.0:
                        posteriors.append(
                            (
                                b.r * (1.0 - m.p_d) / rho,
                                b.density.mean.copy(),
                                b.density.cov.copy(),
                            )
                        )
                    else:
                        posteriors.append(None)
                else:
                    p = assigned[0]
                    post, lik = _kalman(b.density, t.measurements[p], m)
                    w *= b.r * m.p_d * lik
                    assignments.append(p)
                    posteriors.append((1.0, post.mean, post.cov))
            new_meas = sorted(p for p in range(m_z) if choice[p] == POISSON_PART)
            new_posteriors = []
            for p in new_meas:
                rho, r, mean, cov = candidates[p]
                w *= rho
                new_posteriors.append((p, r, mean, cov))
            if w <= 0.0:
                continue
            events.append(
                AssociationEvent(
                    w,
                    parent,
                    tuple(assignments),
                    frozenset(new_meas),
                    tuple(posteriors),
                    tuple(new_posteriors),
                )
            )
            total += w
    if total <= 0.0:
        raise ValueError("measurement set has zero likelihood under the prior")
    events = [
        AssociationEvent(
            e.weight / total,
            e.parent,
            e.assignments,
            e.new_track_meas,
            e.posteriors,
            e.new_posteriors,
        )
        for e in events
    ]
    mu = sum(math.exp(wg.log_weight) for wg in t.poisson)
    log_evidence = math.log(total) - m.clutter_rate - m.p_d * mu
    return events, log_evidence


def mixture_evidence(t: TinyInstance) -> float:
    """log density of the measurement set via the block-form likelihood,
    summed over the implied prior global hypotheses. Independent route to
    the evidence returned by brute_posterior."""
    track_norm = [sum(b.weight for b in hs) for hs in t.bernoullis]
    total = 0.0
    for parent in itertools.product(*[range(len(hs)) for hs in t.bernoullis]):
        w = 1.0
        blocks = []
        for i, s in enumerate(parent):
            b = t.bernoullis[i][s]
            w *= b.weight / track_norm[i]
            if b.r > 0.0:
                blocks.append(b)
        total += w * likelihood_blocks(
            t.measurements, blocks, t.poisson, t.model
        )
    return math.log(total)
