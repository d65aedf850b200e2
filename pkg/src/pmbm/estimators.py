"""Three state extractors over a PMBM density.

All of them score global hypotheses in the log domain; ties in any argmax
resolve to the lower hypothesis index, cardinality ties to the smaller
count, and equal existence probabilities order by track id. Scores only
ever differ from the cited products by the common normalization constant,
so renormalizing the density never changes the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import PmbmDensity, cardinality_distribution


@dataclass(frozen=True)
class StateEstimate:
    """Reported targets at one step: (track id, mean) pairs, ids distinct."""

    time: int
    targets: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self):
        ids = [tid for tid, _ in self.targets]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate track ids in estimate: {ids}")

    @property
    def cardinality(self) -> int:
        return len(self.targets)

    def means(self) -> list[np.ndarray]:
        return [mean for _, mean in self.targets]


def _best_index(scores) -> int:
    best = 0
    for j in range(1, len(scores)):
        if scores[j] > scores[best]:
            best = j
    return best


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def _selected(g, by_id):
    """(track id, Bernoulli) pairs with positive existence, track-id order.

    Skipping r=0 components never changes a report (no estimator reports
    them) nor a score (their factors are log 1)."""
    out = [
        (tid, b)
        for tid, idx in g.selection.items()
        if (b := by_id[tid].hypotheses[idx].bernoulli).r > 0.0
    ]
    out.sort()
    return out


def estimate1(d: PmbmDensity, threshold: float) -> StateEstimate:
    """Highest-weight global hypothesis; report its Bernoullis with
    existence strictly above the threshold."""
    if not d.global_hypotheses:
        raise ValueError("density has no global hypotheses")
    by_id = {t.id: t for t in d.tracks}
    scores = [g.log_weight for g in d.global_hypotheses]
    g = d.global_hypotheses[_best_index(scores)]
    targets = tuple(
        (tid, b.density.mean)
        for tid, b in _selected(g, by_id)
        if b.r > threshold
    )
    return StateEstimate(d.time, targets)


def estimate2(d: PmbmDensity) -> StateEstimate:
    """MAP cardinality n* first, then the best hypothesis for exactly n*
    targets; report its n* highest-existence Bernoullis.

    The score of hypothesis j is its weight times prod r over the n* most
    existing components times prod (1 - r) over the rest; hypotheses with
    fewer than n* components score zero.
    """
    if not d.global_hypotheses:
        raise ValueError("density has no global hypotheses")
    by_id = {t.id: t for t in d.tracks}
    n_star = cardinality_distribution(d.global_hypotheses, d.tracks).map_estimate()
    scores = []
    for g in d.global_hypotheses:
        ordered = sorted(_selected(g, by_id), key=lambda tb: (-tb[1].r, tb[0]))
        if len(ordered) < n_star:
            scores.append(-math.inf)
            continue
        s = g.log_weight
        for l, (_, b) in enumerate(ordered):
            s += _log(b.r) if l < n_star else _log(1.0 - b.r)
        scores.append(s)
    j = _best_index(scores)
    g = d.global_hypotheses[j]
    ordered = sorted(_selected(g, by_id), key=lambda tb: (-tb[1].r, tb[0]))
    targets = tuple((tid, b.density.mean) for tid, b in ordered[:n_star])
    return StateEstimate(d.time, targets)


def estimate3(d: PmbmDensity) -> StateEstimate:
    """Best hypothesis under the deterministic-existence score (r rounded at
    0.5); report the components on the existing side, boundary included."""
    if not d.global_hypotheses:
        raise ValueError("density has no global hypotheses")
    by_id = {t.id: t for t in d.tracks}
    scores = []
    for g in d.global_hypotheses:
        s = g.log_weight
        for _, b in _selected(g, by_id):
            s += _log(b.r) if b.r >= 0.5 else _log(1.0 - b.r)
        scores.append(s)
    g = d.global_hypotheses[_best_index(scores)]
    targets = tuple(
        (tid, b.density.mean)
        for tid, b in _selected(g, by_id)
        if b.r >= 0.5
    )
    return StateEstimate(d.time, targets)
