"""Named self-checks comparing the fast implementations against the
brute-force references, shared by the validate command and the test suite.

Each check builds randomized fixtures from an explicit seed, runs both
routes, and reports the worst discrepancy. The perturb argument injects an
artificial error into the candidate values so a harness failure is
demonstrably detectable; it exists for exercising the reporting path and
must stay 0.0 for real validation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .assignment import CostMatrix, murty_kbest
from .density import (
    BernoulliComponent,
    GlobalHypothesis,
    PmbmDensity,
    SingleTargetHypothesis,
    Track,
    cardinality_distribution,
    mbm_to_mbm01,
    nonexistent_hypothesis,
)
from .filter import no_pruning_params, update_with_evidence
from .gaussian import (
    Gaussian,
    GaussianMixture,
    LinearGaussianModel,
    WeightedGaussian,
    log_sum_exp,
)
from .oracle import (
    TinyBernoulli,
    TinyInstance,
    brute_posterior,
    likelihood_blocks,
    likelihood_decomposed,
    likelihood_direct,
    mixture_evidence,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    cases: int
    worst_error: float
    detail: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        out = (
            f"[{status}] {self.name}: {self.cases} cases, "
            f"worst error {self.worst_error:.3e}"
        )
        if self.detail:
            out += f" ({self.detail})"
        return out


# ---------------------------------------------------------------------------
# randomized fixture builders


def random_spd(rng, dim, scale=1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim))
    return scale * (a @ a.T + dim * np.eye(dim))


def random_gaussian(rng, dim, spread=3.0) -> Gaussian:
    return Gaussian(rng.normal(scale=spread, size=dim), random_spd(rng, dim))


def random_model(rng, state_dim=2, meas_dim=1, p_d=None) -> LinearGaussianModel:
    n_birth = int(rng.integers(1, 3))
    birth = GaussianMixture(
        tuple(
            WeightedGaussian(
                float(np.log(rng.uniform(0.05, 0.8))),
                random_gaussian(rng, state_dim),
            )
            for _ in range(n_birth)
        )
    )
    return LinearGaussianModel(
        F=rng.normal(scale=0.6, size=(state_dim, state_dim))
        + 0.5 * np.eye(state_dim),
        Q=random_spd(rng, state_dim, 0.3),
        H=rng.normal(size=(meas_dim, state_dim)),
        R=random_spd(rng, meas_dim, 0.5),
        p_s=float(rng.uniform(0.5, 1.0)),
        p_d=float(rng.uniform(0.15, 0.95)) if p_d is None else p_d,
        clutter_rate=float(rng.uniform(0.3, 3.0)),
        clutter_density=float(rng.uniform(0.05, 0.5)),
        birth=birth,
    )


def random_tiny_instance(rng, p_d=None) -> TinyInstance:
    """Small instance with every enumeration branch reachable: 1-2 tracks of
    1-2 hypotheses (at most one per track standing for non-existence), 1-2
    Poisson components, 1-2 measurements near the predicted observations."""
    m = random_model(rng, p_d=p_d)
    poisson = GaussianMixture(
        tuple(
            WeightedGaussian(
                float(np.log(rng.uniform(0.1, 1.5))),
                random_gaussian(rng, m.state_dim),
            )
            for _ in range(int(rng.integers(1, 3)))
        )
    )
    tracks = []
    for _ in range(int(rng.integers(1, 3))):
        hyps = []
        allow_zero = True
        for _ in range(int(rng.integers(1, 3))):
            if allow_zero and rng.random() < 0.25:
                r = 0.0
                allow_zero = False
            else:
                r = float(rng.uniform(0.05, 1.0))
            hyps.append(
                TinyBernoulli(
                    float(rng.uniform(0.2, 1.0)), r, random_gaussian(rng, m.state_dim)
                )
            )
        if all(h.r == 0.0 for h in hyps):
            hyps.append(
                TinyBernoulli(0.5, 0.7, random_gaussian(rng, m.state_dim))
            )
        tracks.append(tuple(hyps))
    zs = []
    for _ in range(int(rng.integers(1, 3))):
        anchor = random_gaussian(rng, m.state_dim).mean
        zs.append(m.H @ anchor + rng.normal(scale=1.5, size=m.meas_dim))
    return TinyInstance(poisson, tuple(tracks), tuple(zs), m)


# ---------------------------------------------------------------------------
# instance conversion and event matching


def tiny_to_density(t: TinyInstance) -> PmbmDensity:
    """PmbmDensity at time 0 whose implied global hypotheses match the
    instance: per-track trees with the non-existent hypothesis standing in
    for any r=0 entry, and product-weight globals."""
    tracks = []
    index_map: list[dict[int, int]] = []
    for i, hyps in enumerate(t.bernoullis):
        if sum(1 for h in hyps if h.r == 0.0) > 1:
            raise ValueError("at most one r=0 hypothesis per track")
        tree = [nonexistent_hypothesis(hyps[0].density)]
        imap: dict[int, int] = {}
        for s, h in enumerate(hyps):
            if h.r == 0.0:
                imap[s] = 0
            else:
                imap[s] = len(tree)
                tree.append(
                    SingleTargetHypothesis(
                        BernoulliComponent(h.r, h.density),
                        math.log(h.weight),
                        # pseudo-measurement indices, distinct across tracks
                        # so no global ever claims one twice
                        ((0, 8 * i + s),),
                        None,
                    )
                )
        tracks.append(Track(i, tuple(tree), 0, 0))
        index_map.append(imap)

    track_norm = [
        log_sum_exp([math.log(h.weight) for h in hyps]) for hyps in t.bernoullis
    ]
    globals_out = []
    for parent in itertools.product(*[range(len(hs)) for hs in t.bernoullis]):
        lw = sum(
            math.log(t.bernoullis[i][s].weight) - track_norm[i]
            for i, s in enumerate(parent)
        )
        selection = {i: index_map[i][s] for i, s in enumerate(parent)}
        globals_out.append(GlobalHypothesis(lw, selection))
    return PmbmDensity(t.poisson, tuple(tracks), tuple(globals_out), 0, len(tracks))


def _decode_children(t: TinyInstance, post: PmbmDensity):
    """Map each updated global hypothesis back to the oracle's event key
    (parent selection, per-track assignment, first-detection measurements),
    with the surviving Bernoulli parameters for comparison."""
    n_tracks = len(t.bernoullis)
    m_z = len(t.measurements)
    # invert tiny_to_density's hypothesis placement: density index -> tiny s
    rev: list[dict[int, int]] = []
    for hyps in t.bernoullis:
        rmap: dict[int, int] = {}
        pos = 1
        for s, h in enumerate(hyps):
            if h.r == 0.0:
                rmap[0] = s
            else:
                rmap[pos] = s
                pos += 1
        rev.append(rmap)
    new_track_meas = {
        tr.birth_measurement: tr.id for tr in post.tracks if tr.id >= n_tracks
    }
    decoded = []
    for g in post.global_hypotheses:
        parent: list[int] = []
        assignments: list[int | None] = []
        posteriors: list = []
        claimed: set[int] = set()
        for i in range(n_tracks):
            tr = post.track_by_id(i)
            h = tr.hypotheses[g.selection[i]]
            if h.is_nonexistent:
                parent.append(rev[i][0])
                assignments.append(None)
                posteriors.append(None)
                continue
            parent.append(rev[i][h.parent])
            last_time, last_meas = h.assoc_history[-1]
            if last_time != post.time:
                raise AssertionError("stale hypothesis selected after update")
            assignments.append(last_meas)
            if last_meas >= 0:
                claimed.add(last_meas)
            posteriors.append(
                (h.bernoulli.r, h.bernoulli.density.mean, h.bernoulli.density.cov)
            )
        new_set = frozenset(p for p in range(m_z) if p not in claimed)
        new_posteriors = []
        for p in sorted(new_set):
            tid = new_track_meas.get(p)
            if tid is None:
                new_posteriors.append(None)
                continue
            h = post.track_by_id(tid).hypotheses[g.selection[tid]]
            if h.is_nonexistent:
                raise AssertionError(
                    f"measurement {p} unclaimed but its track selects non-existence"
                )
            new_posteriors.append(
                (h.bernoulli.r, h.bernoulli.density.mean, h.bernoulli.density.cov)
            )
        for p, tid in new_track_meas.items():
            h = post.track_by_id(tid).hypotheses[g.selection[tid]]
            if (p in claimed) != h.is_nonexistent:
                raise AssertionError(
                    f"track for measurement {p} disagrees with the assignment"
                )
        decoded.append(
            (
                (tuple(parent), tuple(assignments), new_set),
                math.exp(g.log_weight),
                tuple(posteriors),
                tuple(new_posteriors),
            )
        )
    return decoded


def compare_update(t: TinyInstance) -> dict:
    """Run the filter update (no pruning, no gating) and the exhaustive
    enumeration on the same instance; return the worst discrepancies."""
    events, log_ev_oracle = brute_posterior(t)
    post, log_ev = update_with_evidence(
        tiny_to_density(t), list(t.measurements), t.model, no_pruning_params()
    )
    decoded = _decode_children(t, post)
    by_key = {e.key(): e for e in events}
    if len(by_key) != len(events):
        raise AssertionError("oracle produced duplicate event keys")
    if len(decoded) != len(events):
        raise AssertionError(
            f"hypothesis count mismatch: filter {len(decoded)}, oracle {len(events)}"
        )
    worst_w = 0.0
    worst_param = 0.0
    for key, weight, posteriors, new_posteriors in decoded:
        ev = by_key.get(key)
        if ev is None:
            raise AssertionError(f"filter hypothesis {key} missing from oracle")
        worst_w = max(worst_w, abs(weight - ev.weight))
        for mine, ref in zip(posteriors, ev.posteriors):
            if mine is None or ref is None:
                continue
            worst_param = max(
                worst_param,
                abs(mine[0] - ref[0]),
                float(np.max(np.abs(mine[1] - ref[1]))),
                float(np.max(np.abs(mine[2] - ref[2]))),
            )
        refs_new = {p: (r, mean, cov) for p, r, mean, cov in ev.new_posteriors}
        for p, mine in zip(sorted(key[2]), new_posteriors):
            ref = refs_new[p]
            if mine is None:
                # no Poisson component gated: the oracle candidate must be
                # pure clutter
                worst_param = max(worst_param, abs(ref[0]))
                continue
            worst_param = max(
                worst_param,
                abs(mine[0] - ref[0]),
                float(np.max(np.abs(mine[1] - ref[1]))),
                float(np.max(np.abs(mine[2] - ref[2]))),
            )
    return {
        "weight_error": worst_w,
        "param_error": worst_param,
        "evidence_error": abs(log_ev - log_ev_oracle),
        "log_evidence_oracle": log_ev_oracle,
        "events": len(events),
    }


# ---------------------------------------------------------------------------
# the named checks


def check_likelihood_equivalence(
    cases: int = 60, seed: int = 0, tol: float = 1e-12, perturb: float = 0.0
) -> CheckResult:
    """likelihood_direct vs likelihood_decomposed vs the block form with
    deterministic (r=1, zero-covariance) blocks, on random fixtures."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    n = 0
    for _ in range(cases):
        m = random_model(rng)
        n_z = int(rng.integers(0, 4))
        n_x = int(rng.integers(0, 4))
        zs = [rng.normal(scale=4.0, size=m.meas_dim) for _ in range(n_z)]
        xs = [rng.normal(scale=3.0, size=m.state_dim) for _ in range(n_x)]
        direct = likelihood_direct(zs, xs, m) + perturb
        decomposed = likelihood_decomposed(zs, xs, m)
        blocks = likelihood_blocks(
            zs,
            [
                BernoulliComponent(1.0, Gaussian(x, np.zeros((m.state_dim,) * 2)))
                for x in xs
            ],
            GaussianMixture(),
            m,
        )
        scale = max(abs(direct), abs(decomposed), abs(blocks))
        worst = max(
            worst,
            abs(direct - decomposed) / scale,
            abs(direct - blocks) / scale,
        )
        n += 1
    return CheckResult("likelihood_equivalence", worst <= tol, n, worst)


def check_conjugacy(
    cases: int = 40, seed: int = 1, tol: float = 1e-10, perturb: float = 0.0
) -> CheckResult:
    """Filter update vs exhaustive enumeration on random tiny instances:
    same hypotheses, same weights, same Bernoulli parameters, same evidence.
    Also cross-checks the evidence against the block-form likelihood."""
    rng = np.random.default_rng(seed)
    worst_w = 0.0
    worst_p = 0.0
    worst_e = 0.0
    n = 0
    for _ in range(cases):
        t = random_tiny_instance(rng)
        res = compare_update(t)
        ev_blocks = abs(mixture_evidence(t) - res["log_evidence_oracle"])
        worst_w = max(worst_w, res["weight_error"] + perturb)
        worst_p = max(worst_p, res["param_error"])
        worst_e = max(worst_e, res["evidence_error"], ev_blocks)
        n += 1
    # Bernoulli parameters and evidence carry an extra Kalman solve; allow
    # them 100x the weight tolerance
    passed = worst_w <= tol and worst_p <= 100 * tol and worst_e <= 100 * tol
    return CheckResult(
        "conjugacy",
        passed,
        n,
        worst_w,
        f"params {worst_p:.1e}, evidence {worst_e:.1e}",
    )


def _enumerate_assignments(costs: np.ndarray):
    """All feasible row->column assignments, cheapest first, ties by column
    tuple. Factorial; fixture sizes only."""
    m, n = costs.shape
    out = []
    for cols in itertools.permutations(range(n), m):
        total = sum(costs[r, c] for r, c in enumerate(cols))
        if math.isfinite(total):
            out.append((float(total), cols))
    out.sort()
    return out


def check_murty(
    cases: int = 60, seed: int = 2, tol: float = 1e-9, perturb: float = 0.0
) -> CheckResult:
    """murty_kbest vs exhaustive ranking on random valid cost matrices."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    n = 0
    for _ in range(cases):
        m_rows = int(rng.integers(1, 5))
        n_old = int(rng.integers(0, 4))
        block = rng.normal(scale=3.0, size=(m_rows, n_old))
        block[rng.random(size=block.shape) < 0.25] = np.inf
        diag = np.full((m_rows, m_rows), np.inf)
        np.fill_diagonal(diag, rng.normal(scale=3.0, size=m_rows))
        costs = np.hstack([block, diag])
        ranked = _enumerate_assignments(costs)
        k = int(rng.integers(1, len(ranked) + 2))
        got = murty_kbest(CostMatrix(costs), k)
        want = ranked[:k]
        if len(got) != len(want):
            return CheckResult(
                "murty", False, n + 1, math.inf,
                f"answer count {len(got)} != {len(want)}",
            )
        for a, (cost, cols) in zip(got, want):
            worst = max(worst, abs(a.cost + perturb - cost))
            if a.row_to_col != cols and abs(a.cost - cost) > tol:
                return CheckResult(
                    "murty", False, n + 1, math.inf,
                    f"order mismatch {a.row_to_col} vs {cols}",
                )
        n += 1
    return CheckResult("murty", worst <= tol, n, worst)


def _random_small_density(rng) -> PmbmDensity:
    """A valid multi-track density with a few globals, for expansion checks."""
    dim = 2
    n_tracks = int(rng.integers(1, 4))
    tracks = []
    for tid in range(n_tracks):
        hyps = [nonexistent_hypothesis(random_gaussian(rng, dim))]
        for s in range(int(rng.integers(1, 3))):
            r = float(rng.choice([rng.uniform(0.05, 0.95), 1.0]))
            hyps.append(
                SingleTargetHypothesis(
                    BernoulliComponent(r, random_gaussian(rng, dim)),
                    float(-rng.uniform(0.0, 2.0)),
                    ((0, tid * 7 + s),),
                    None,
                )
            )
        tracks.append(Track(tid, tuple(hyps), 0, 0))
    n_globals = int(rng.integers(1, 4))
    raw = []
    for _ in range(n_globals):
        sel = {
            tr.id: int(rng.integers(0, len(tr.hypotheses))) for tr in tracks
        }
        raw.append(sel)
    lws = -rng.uniform(0.0, 2.0, size=len(raw))
    lws = lws - log_sum_exp(lws)
    globals_out = tuple(
        GlobalHypothesis(float(lw), sel) for lw, sel in zip(lws, raw)
    )
    poisson = GaussianMixture(
        (WeightedGaussian(0.0, random_gaussian(rng, dim)),)
    )
    return PmbmDensity(poisson, tuple(tracks), globals_out, 0, n_tracks)


def check_mbm01(
    cases: int = 30, seed: int = 3, tol: float = 1e-12, perturb: float = 0.0
) -> CheckResult:
    """Deterministic-existence expansion: component count, mass
    conservation, and cardinality agreement against the direct pmf."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    n = 0
    for _ in range(cases):
        d = _random_small_density(rng)
        comps = mbm_to_mbm01(d.global_hypotheses, d.tracks)
        expected = 0
        for g in d.global_hypotheses:
            frac = sum(
                1
                for tid, idx in g.selection.items()
                if 0.0 < d.track_by_id(tid).hypotheses[idx].bernoulli.r < 1.0
            )
            expected += 2**frac
        if len(comps) != expected:
            return CheckResult(
                "mbm01", False, n + 1, math.inf,
                f"component count {len(comps)} != {expected}",
            )
        mass = log_sum_exp([c.log_weight for c in comps]) + perturb
        total = log_sum_exp([g.log_weight for g in d.global_hypotheses])
        worst = max(worst, abs(mass - total))
        pmf = cardinality_distribution(d.global_hypotheses, d.tracks)
        by_card = np.zeros(pmf.probabilities.size)
        for c in comps:
            k = len(c.deterministic_targets)
            if k >= by_card.size:
                return CheckResult(
                    "mbm01", False, n + 1, math.inf,
                    f"expansion cardinality {k} outside pmf support",
                )
            by_card[k] += math.exp(c.log_weight)
        worst = max(
            worst, float(np.max(np.abs(by_card - pmf.probabilities)))
        )
        n += 1
    return CheckResult("mbm01", worst <= tol, n, worst)


ALL_CHECKS = (
    ("likelihood_equivalence", check_likelihood_equivalence),
    ("conjugacy", check_conjugacy),
    ("murty", check_murty),
    ("mbm01", check_mbm01),
)


def run_checks(name_filter: str | None = None, perturb: float = 0.0):
    """Run every check whose name contains name_filter; list of results."""
    results = []
    for name, fn in ALL_CHECKS:
        if name_filter and name_filter not in name:
            continue
        try:
            results.append(fn(perturb=perturb))
        except AssertionError as err:
            results.append(CheckResult(name, False, 0, math.inf, str(err)))
    return results
