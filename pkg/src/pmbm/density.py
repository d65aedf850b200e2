"""The PMBM density data model and its structural transforms.

A PmbmDensity is the disjoint union of a Poisson intensity over targets that
have never been detected and a multi-Bernoulli mixture over potential targets
started by measurements. The mixture is stored track-oriented: each Track
keeps the single-target hypotheses grown from its starting measurement, and
each GlobalHypothesis picks one hypothesis per track.

Conventions used throughout the package:

* hypothesis index 0 of every track is the designated "non-existent"
  hypothesis (r = 0, weight exactly 1, empty association history). It stands
  for "this track was never started" and lets every global hypothesis carry a
  total selection over all tracks.
* an association history is a tuple of (time step, measurement index) records
  with MISS = -1 marking a scan with no associated measurement. An empty
  history is what identifies the non-existent hypothesis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .gaussian import Gaussian, GaussianMixture, log_sum_exp

MISS = -1


@dataclass(frozen=True)
class BernoulliComponent:
    """A potential target: exists with probability r, conditionally ~ density."""

    r: float
    density: Gaussian

    def __post_init__(self):
        r = float(self.r)
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"existence probability outside [0,1]: {r}")
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class SingleTargetHypothesis:
    """One measurement-association history for a potential target.

    log_weight is the raw (unnormalized) hypothesis weight; normalization
    happens only at the global-hypothesis level. parent is the index of the
    hypothesis this one was grown from in the same track's previous-scan
    hypothesis list; it is meaningful within the scan that created the
    hypothesis and kept only as a diagnostic afterwards.
    """

    bernoulli: BernoulliComponent
    log_weight: float
    assoc_history: tuple[tuple[int, int], ...] = ()
    parent: int | None = None

    def __post_init__(self):
        lw = float(self.log_weight)
        if math.isnan(lw) or lw == math.inf:
            raise ValueError(f"log_weight must be finite or -inf, got {lw}")
        object.__setattr__(self, "log_weight", lw)
        hist = tuple(self.assoc_history)
        object.__setattr__(self, "assoc_history", hist)
        if len(hist) > 1:
            times = [rec[0] for rec in hist]
            # strictly increasing == sorted with no repeats
            if times != sorted(set(times)):
                raise ValueError(
                    f"association history not increasing in time: {hist}"
                )

    @property
    def is_nonexistent(self) -> bool:
        return not self.assoc_history


def nonexistent_hypothesis(placeholder: Gaussian) -> SingleTargetHypothesis:
    """The 'track was never started' hypothesis: r = 0, weight exactly 1.

    The density is an inert placeholder (r = 0 makes it irrelevant); passing
    the track's birth density keeps dimensions consistent.
    """
    return SingleTargetHypothesis(BernoulliComponent(0.0, placeholder), 0.0, (), None)


@dataclass(frozen=True)
class Track:
    """A potential target and its tree of single-target hypotheses.

    hypotheses[0] is always the non-existent hypothesis; real hypotheses
    follow from index 1 on.
    """

    id: int
    hypotheses: tuple[SingleTargetHypothesis, ...]
    birth_time: int
    birth_measurement: int

    def __post_init__(self):
        hyps = tuple(self.hypotheses)
        if not hyps:
            raise ValueError("a track needs at least one hypothesis")
        object.__setattr__(self, "hypotheses", hyps)


@dataclass(frozen=True)
class GlobalHypothesis:
    """One single-target hypothesis per track, with a log weight."""

    log_weight: float
    selection: dict[int, int]

    def __post_init__(self):
        lw = float(self.log_weight)
        if math.isnan(lw) or lw == math.inf:
            raise ValueError(f"log_weight must be finite or -inf, got {lw}")
        object.__setattr__(self, "log_weight", lw)
        object.__setattr__(
            self, "selection", {int(k): int(v) for k, v in dict(self.selection).items()}
        )

    def selection_key(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.selection.items()))


@dataclass(frozen=True)
class PmbmDensity:
    """Full filtering state: Poisson intensity + tracks + global hypotheses.

    time is the index of the last processed scan (0 before any update);
    next_track_id feeds stable never-reused track ids.
    """

    poisson: GaussianMixture
    tracks: tuple[Track, ...] = ()
    global_hypotheses: tuple[GlobalHypothesis, ...] = ()
    time: int = 0
    next_track_id: int = 0

    def __post_init__(self):
        tracks = tuple(self.tracks)
        globals_ = tuple(self.global_hypotheses)
        object.__setattr__(self, "tracks", tracks)
        object.__setattr__(self, "global_hypotheses", globals_)
        ids = [t.id for t in tracks]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate track ids: {ids}")
        id_set = set(ids)
        sizes = {t.id: len(t.hypotheses) for t in tracks}
        for g in globals_:
            if set(g.selection) != id_set:
                raise ValueError(
                    f"selection keys {sorted(g.selection)} != track ids {sorted(id_set)}"
                )
            for tid, idx in g.selection.items():
                if not 0 <= idx < sizes[tid]:
                    raise ValueError(f"selection index {idx} out of range for track {tid}")

    @staticmethod
    def empty() -> "PmbmDensity":
        """No targets, no tracks, one empty global hypothesis of weight 1."""
        return PmbmDensity(GaussianMixture(), (), (GlobalHypothesis(0.0, {}),), 0, 0)

    def track_by_id(self, tid: int) -> Track:
        for t in self.tracks:
            if t.id == tid:
                return t
        raise KeyError(tid)


def normalize(d: PmbmDensity) -> PmbmDensity:
    """Shift global log-weights so the linear weights sum to one."""
    if not d.global_hypotheses:
        raise ValueError("density has no global hypotheses")
    total = log_sum_exp([g.log_weight for g in d.global_hypotheses])
    if total == -math.inf:
        raise ValueError("all global hypothesis weights are zero")
    if total == 0.0:
        return d
    shifted = tuple(
        GlobalHypothesis(g.log_weight - total, g.selection) for g in d.global_hypotheses
    )
    return replace(d, global_hypotheses=shifted)


def selected_bernoullis(
    g: GlobalHypothesis, tracks
) -> list[tuple[int, BernoulliComponent]]:
    """(track id, Bernoulli) pairs selected by g, in track-id order."""
    by_id = {t.id: t for t in tracks}
    return [
        (tid, by_id[tid].hypotheses[idx].bernoulli)
        for tid, idx in sorted(g.selection.items())
    ]


@dataclass(frozen=True)
class Mbm01Component:
    """One deterministic-existence expansion of a global hypothesis.

    hypothesis_index records which global hypothesis the component came from,
    so components can be grouped back for round-trip checks.
    """

    log_weight: float
    deterministic_targets: tuple[Gaussian, ...]
    hypothesis_index: int = 0


def mbm_to_mbm01(global_hypotheses, tracks) -> list[Mbm01Component]:
    """Expand an MBM so every Bernoulli has existence exactly 0 or 1.

    Each selected Bernoulli with r strictly inside (0,1) branches into an
    "exists" copy of weight r and an "absent" copy of weight 1-r; r = 1
    components are present in every branch and r = 0 components in none.
    The expansion multiplies hypothesis counts and is used for diagnostics
    and oracle checks only, never inside the filter.
    """
    out: list[Mbm01Component] = []
    for j, g in enumerate(global_hypotheses):
        certain: list[Gaussian] = []
        fractional: list[BernoulliComponent] = []
        for _, bern in selected_bernoullis(g, tracks):
            if bern.r == 1.0:
                certain.append(bern.density)
            elif bern.r > 0.0:
                fractional.append(bern)
        for bits in itertools.product((0, 1), repeat=len(fractional)):
            lw = g.log_weight
            targets = list(certain)
            for bern, bit in zip(fractional, bits):
                if bit:
                    lw += math.log(bern.r)
                    targets.append(bern.density)
                else:
                    lw += math.log1p(-bern.r)
            out.append(Mbm01Component(lw, tuple(targets), j))
    return out


@dataclass(frozen=True)
class CardinalityPmf:
    """Distribution of the number of existing targets."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("cardinality pmf must be a nonempty vector")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a pmf: min {p.min()}, sum {p.sum()}")

    def map_estimate(self) -> int:
        """Most probable cardinality; exact ties go to the smaller count."""
        return int(np.argmax(self.probabilities))


def _bernoulli_cardinality(rs) -> np.ndarray:
    pmf = np.ones(1)
    for r in rs:
        # r = 0 components cannot contribute a target; skipping them only
        # trims trailing zeros from the pmf
        if r > 0.0:
            pmf = np.convolve(pmf, [1.0 - r, r])
    return pmf


def cardinality_distribution(global_hypotheses, tracks) -> CardinalityPmf:
    """Mixture cardinality pmf: per-hypothesis Bernoulli convolutions, mixed
    by the (normalized) global weights."""
    by_id = {t.id: t for t in tracks}
    parts = []
    # hypotheses frequently select permutations of the same existence values;
    # the convolution only depends on the multiset
    memo: dict[tuple, np.ndarray] = {}
    for g in global_hypotheses:
        rs = sorted(
            r
            for tid, idx in g.selection.items()
            if (r := by_id[tid].hypotheses[idx].bernoulli.r) > 0.0
        )
        key = tuple(rs)
        pmf = memo.get(key)
        if pmf is None:
            pmf = _bernoulli_cardinality(rs)
            memo[key] = pmf
        parts.append((math.exp(g.log_weight), pmf))
    size = max(p.size for _, p in parts)
    probs = np.zeros(size)
    total = 0.0
    for w, p in parts:
        probs[: p.size] += w * p
        total += w
    return CardinalityPmf(probs / total)


@dataclass(frozen=True)
class MbmHypothesis:
    """Flat multi-Bernoulli hypothesis: weight and an explicit Bernoulli list."""

    log_weight: float
    bernoullis: tuple[BernoulliComponent, ...]


@dataclass(frozen=True)
class Mbm:
    """Flat multi-Bernoulli mixture; the no-target mixture has one empty
    hypothesis of weight 1."""

    hypotheses: tuple[MbmHypothesis, ...]


def empty_mbm() -> Mbm:
    return Mbm((MbmHypothesis(0.0, ()),))


def mbm_union(a: Mbm, b: Mbm) -> Mbm:
    """Union of two independent MBMs: the Cartesian product of hypotheses,
    concatenating Bernoulli lists and summing log weights."""
    return Mbm(
        tuple(
            MbmHypothesis(ha.log_weight + hb.log_weight, ha.bernoullis + hb.bernoullis)
            for ha in a.hypotheses
            for hb in b.hypotheses
        )
    )


def flatten_mbm(global_hypotheses, tracks) -> Mbm:
    """Track/global form -> flat form (selection indirection resolved)."""
    return Mbm(
        tuple(
            MbmHypothesis(
                g.log_weight,
                tuple(bern for _, bern in selected_bernoullis(g, tracks)),
            )
            for g in global_hypotheses
        )
    )


def mbm_cardinality(m: Mbm) -> CardinalityPmf:
    parts = [
        (math.exp(h.log_weight), _bernoulli_cardinality([b.r for b in h.bernoullis]))
        for h in m.hypotheses
    ]
    size = max(p.size for _, p in parts)
    probs = np.zeros(size)
    total = 0.0
    for w, p in parts:
        probs[: p.size] += w * p
        total += w
    return CardinalityPmf(probs / total)


def check_measurement_partition(d: PmbmDensity) -> None:
    """Assert no (time, measurement) record is claimed twice within any
    global hypothesis."""
    for g in d.global_hypotheses:
        seen: set[tuple[int, int]] = set()
        for tid, idx in g.selection.items():
            for t, j in d.track_by_id(tid).hypotheses[idx].assoc_history:
                if j == MISS:
                    continue
                if (t, j) in seen:
                    raise AssertionError(
                        f"measurement {j} at step {t} used twice in one hypothesis"
                    )
                seen.add((t, j))


def check_density(d: PmbmDensity, tol: float = 1e-9) -> None:
    """Structural invariant sweep used by tests and the validation command."""
    total = log_sum_exp([g.log_weight for g in d.global_hypotheses])
    if abs(total) > tol:
        raise AssertionError(f"global weights not normalized: log total {total}")
    for wg in d.poisson:
        _check_cov(wg.gaussian.cov, tol)
    for tr in d.tracks:
        if not tr.hypotheses[0].is_nonexistent:
            raise AssertionError(f"track {tr.id} hypothesis 0 is not the non-existent one")
        for h in tr.hypotheses:
            if not 0.0 <= h.bernoulli.r <= 1.0:
                raise AssertionError(f"existence out of range: {h.bernoulli.r}")
            _check_cov(h.bernoulli.density.cov, tol)
    check_measurement_partition(d)


def _check_cov(p: np.ndarray, tol: float) -> None:
    if np.max(np.abs(p - p.T)) > tol:
        raise AssertionError("covariance not symmetric")
    eigs = np.linalg.eigvalsh(p)
    if eigs.min() < -tol * max(np.trace(p), 1.0):
        raise AssertionError(f"covariance not PSD: min eig {eigs.min()}")


def density_to_json(d: PmbmDensity) -> dict:
    """JSON-ready dict of the density; weights stay in the log domain."""
    return {
        "time": d.time,
        "poisson": [
            {
                "log_weight": wg.log_weight,
                "mean": wg.gaussian.mean.tolist(),
                "cov": wg.gaussian.cov.tolist(),
            }
            for wg in d.poisson
        ],
        "tracks": [
            {
                "id": tr.id,
                "birth_time": tr.birth_time,
                "birth_measurement": tr.birth_measurement,
                "hypotheses": [
                    {
                        "log_weight": h.log_weight,
                        "r": h.bernoulli.r,
                        "mean": h.bernoulli.density.mean.tolist(),
                        "cov": h.bernoulli.density.cov.tolist(),
                        "history": [[int(t), int(j)] for t, j in h.assoc_history],
                        "parent": h.parent,
                    }
                    for h in tr.hypotheses
                ],
            }
            for tr in d.tracks
        ],
        "globals": [
            {
                "log_weight": g.log_weight,
                "selection": {str(tid): idx for tid, idx in sorted(g.selection.items())},
            }
            for g in d.global_hypotheses
        ],
    }
