"""The PMBM recursion: prediction, the three-part update, and pruning.

One scan works as follows. Prediction pushes the Poisson intensity and every
single-target hypothesis through the dynamics (existence scaled by p_s) and
adds the birth intensity to the Poisson part. The update then has three
parts: the intensity of never-detected targets is thinned by (1 - p_d); each
measurement that gates some intensity component starts a candidate new track
(first detection); and every existing hypothesis is extended by a
misdetection child plus one detection child per gated measurement.

Child global hypotheses are formed per parent from a cost matrix whose rows
are the scan's retained measurements and whose columns are the parent's live
tracks followed by a diagonal first-detection/clutter block. Entries are
negative log weight ratios against the misdetection alternative, so the
assignment cost plus the parent's misdetection baseline recovers the exact
child weight. Murty's ranking keeps the k_j = ceil(N_h * w_j) best children
per parent; pruning then caps the union at N_h and compacts the trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import CostMatrix, ranked_assignments
from .density import (
    GlobalHypothesis,
    PmbmDensity,
    SingleTargetHypothesis,
    Track,
    BernoulliComponent,
    nonexistent_hypothesis,
)
from .gaussian import (
    Gaussian,
    GaussianMixture,
    LinearGaussianModel,
    WeightedGaussian,
    gate,
    kalman_predict,
    kalman_update,
    kalman_update_batch,
    log_sum_exp,
    moment_match,
)

_UNBOUNDED_K = 1 << 32


@dataclass(frozen=True)
class FilterParams:
    """Hypothesis-management knobs. max_globals may be math.inf to disable
    truncation (used when comparing against exhaustive enumeration)."""

    max_globals: int | float = 200
    poisson_prune_threshold: float = 1e-5
    existence_prune_threshold: float = 1e-5
    gate_threshold: float = 20.0
    estimator_threshold: float = 0.4

    def __post_init__(self):
        if self.max_globals < 1:
            raise ValueError(f"max_globals must be >= 1, got {self.max_globals}")
        if self.poisson_prune_threshold < 0 or self.existence_prune_threshold < 0:
            raise ValueError("prune thresholds must be >= 0")
        if self.gate_threshold <= 0:
            raise ValueError(f"gate_threshold must be > 0, got {self.gate_threshold}")
        if not 0.0 <= self.estimator_threshold <= 1.0:
            raise ValueError("estimator_threshold must be a probability")


def no_pruning_params() -> FilterParams:
    """Exact-update parameters: no gating, no truncation, no thresholds."""
    return FilterParams(
        max_globals=math.inf,
        poisson_prune_threshold=0.0,
        existence_prune_threshold=0.0,
        gate_threshold=math.inf,
    )


def predict(d: PmbmDensity, m: LinearGaussianModel) -> PmbmDensity:
    """One-step prediction. The Poisson part becomes birth plus p_s-scaled
    predicted survivors; every hypothesis keeps its weight with r scaled by
    p_s and its density pushed through the dynamics; globals are untouched."""
    log_ps = math.log(m.p_s) if m.p_s > 0.0 else -math.inf
    survivors = tuple(
        WeightedGaussian(wg.log_weight + log_ps, kalman_predict(wg.gaussian, m.F, m.Q))
        for wg in d.poisson
    )
    poisson = GaussianMixture(tuple(m.birth.components) + survivors)
    tracks = []
    for tr in d.tracks:
        hyps = tuple(
            SingleTargetHypothesis(
                BernoulliComponent(
                    h.bernoulli.r * m.p_s,
                    kalman_predict(h.bernoulli.density, m.F, m.Q),
                ),
                h.log_weight,
                h.assoc_history,
                h.parent,
            )
            for h in tr.hypotheses
        )
        tracks.append(Track(tr.id, hyps, tr.birth_time, tr.birth_measurement))
    return PmbmDensity(
        poisson, tuple(tracks), d.global_hypotheses, d.time, d.next_track_id
    )


def update_poisson_undetected(intensity: GaussianMixture, p_d: float) -> GaussianMixture:
    """Misdetection update of the undetected-target intensity: scale by 1 - p_d."""
    log_qd = math.log1p(-p_d) if p_d < 1.0 else -math.inf
    return intensity.scaled(log_qd)


def create_new_track(
    z,
    intensity: GaussianMixture,
    m: LinearGaussianModel,
    params: FilterParams,
    *,
    track_id: int = 0,
    time: int = 0,
    meas_index: int = 0,
):
    """First-detection update for one measurement against the Poisson part.

    Returns None when no intensity component gates z; otherwise a new Track
    whose detection hypothesis has existence e(z)/(e(z)+c(z)), a moment-
    matched posterior over the gated components, and log weight
    log(e(z)+c(z)). The track also carries its non-existent hypothesis at
    index 0.
    """
    gated = [
        wg
        for wg in intensity
        if gate(z, wg.gaussian, m.H, m.R, params.gate_threshold)
    ]
    if not gated:
        return None
    comps = []
    for wg in gated:
        post, log_lik = kalman_update(wg.gaussian, z, m.H, m.R)
        comps.append(WeightedGaussian(wg.log_weight + log_lik, post))
    log_e = m.log_p_d + log_sum_exp([c.log_weight for c in comps])
    log_rho = float(np.logaddexp(log_e, m.log_clutter_density))
    if log_rho == -math.inf:
        # zero detection and clutter density: the measurement cannot be
        # explained here at all
        return None
    r = math.exp(log_e - log_rho)
    fused = moment_match(GaussianMixture(tuple(comps))).gaussian
    hyp = SingleTargetHypothesis(
        BernoulliComponent(r, fused), log_rho, ((time, meas_index),), None
    )
    track = Track(
        track_id, (nonexistent_hypothesis(fused), hyp), time, meas_index
    )
    return track, log_rho


def extend_track_misdetection(
    h: SingleTargetHypothesis,
    p_d: float,
    *,
    time: int = 0,
    parent: int | None = None,
) -> SingleTargetHypothesis:
    """Misdetection child: weight factor 1 - r + r(1 - p_d), existence
    r(1 - p_d) over that factor, density unchanged."""
    r = h.bernoulli.r
    factor = 1.0 - r + r * (1.0 - p_d)
    if factor > 0.0:
        new_r = r * (1.0 - p_d) / factor
        log_factor = math.log(factor)
    else:
        # r = 1 and p_d = 1: a sure target is never missed
        new_r = 0.0
        log_factor = -math.inf
    return SingleTargetHypothesis(
        BernoulliComponent(new_r, h.bernoulli.density),
        h.log_weight + log_factor,
        h.assoc_history + ((time, -1),),
        parent,
    )


def extend_track_detection(
    h: SingleTargetHypothesis,
    z,
    m: LinearGaussianModel,
    *,
    time: int = 0,
    meas_index: int = 0,
    parent: int | None = None,
) -> SingleTargetHypothesis:
    """Detection child: weight factor r * p_d * N(z; Hx, S), existence 1,
    Kalman posterior density."""
    post, log_lik = kalman_update(h.bernoulli.density, z, m.H, m.R)
    r = h.bernoulli.r
    log_r = math.log(r) if r > 0.0 else -math.inf
    return SingleTargetHypothesis(
        BernoulliComponent(1.0, post),
        h.log_weight + log_r + m.log_p_d + log_lik,
        h.assoc_history + ((time, meas_index),),
        parent,
    )


def build_cost_matrix(
    g: GlobalHypothesis,
    tracks,
    new_tracks,
    z_gated,
    *,
    model: LinearGaussianModel,
    params: FilterParams,
) -> CostMatrix:
    """Association cost matrix for one parent hypothesis.

    z_gated is the scan's retained measurements as (index, vector) pairs;
    new_tracks is the aligned list of optional (Track, log_rho) candidates,
    None marking a measurement whose only first-detection explanation is
    clutter. Old-track entries are -log of the detection-to-misdetection
    weight ratio; the diagonal holds -log_rho (or -log clutter density).
    """
    by_id = {t.id: t for t in tracks}
    cols = []
    for t in tracks:
        h = by_id[t.id].hypotheses[g.selection[t.id]]
        if not h.is_nonexistent:
            cols.append((t.id, h))
    rows = len(z_gated)
    costs = np.full((rows, len(cols) + rows), np.inf)
    for ci, (_, h) in enumerate(cols):
        # the entries only use weight ratios, but the scratch children still
        # need a history-consistent extension time
        t_next = h.assoc_history[-1][0] + 1 if h.assoc_history else 0
        mis = extend_track_misdetection(h, model.p_d, time=t_next)
        for row, (_, z) in enumerate(z_gated):
            if gate(z, h.bernoulli.density, model.H, model.R, params.gate_threshold):
                det = extend_track_detection(h, z, model, time=t_next)
                costs[row, ci] = -(det.log_weight - mis.log_weight)
    for row, (_, _z) in enumerate(z_gated):
        nt = new_tracks[row]
        costs[row, len(cols) + row] = -(
            nt[1] if nt is not None else model.log_clutter_density
        )
    return CostMatrix(
        costs,
        tuple(p for p, _ in z_gated),
        tuple(tid for tid, _ in cols),
    )


def update(d: PmbmDensity, Z, m: LinearGaussianModel, params: FilterParams) -> PmbmDensity:
    """Measurement update of a normalized density; result is normalized and
    pruned."""
    return _update(d, Z, m, params)[0]


def update_with_evidence(
    d: PmbmDensity, Z, m: LinearGaussianModel, params: FilterParams
) -> tuple[PmbmDensity, float]:
    """update plus the scan's log normalizer (the log density of Z given the
    predicted prior, constants included)."""
    return _update(d, Z, m, params)


def _k_allotment(max_globals, parent_log_weight: float) -> int:
    if math.isinf(max_globals):
        return _UNBOUNDED_K
    return max(1, math.ceil(max_globals * math.exp(parent_log_weight) - 1e-12))


def _update(d, Z, m, params):
    t = d.time + 1
    z_list = [np.asarray(z, dtype=float) for z in Z]
    m_z = len(z_list)
    z_arr = (
        np.stack(z_list) if m_z else np.zeros((0, m.meas_dim))
    )

    poisson = update_poisson_undetected(d.poisson, m.p_d)

    # first-detection candidates, one per measurement
    new_tracks = []
    diag_lw = []
    next_id = d.next_track_id
    for p in range(m_z):
        res = create_new_track(
            z_list[p], d.poisson, m, params, track_id=next_id, time=t, meas_index=p
        )
        if res is None:
            new_tracks.append(None)
            diag_lw.append(m.log_clutter_density)
        else:
            new_tracks.append(res[0])
            diag_lw.append(res[1])
            next_id += 1

    # extend previously detected tracks; children are indexed so the
    # per-parent matrices below are pure lookups
    ext_tracks: list[Track] = []
    mis_index: list[list[int]] = []
    det_index: list[list[dict[int, int]]] = []
    gated_any = np.zeros(m_z, dtype=bool)
    for tr in d.tracks:
        hyps: list[SingleTargetHypothesis] = []
        mis_i: list[int] = []
        det_i: list[dict[int, int]] = []
        for s, h in enumerate(tr.hypotheses):
            if h.is_nonexistent:
                mis_i.append(len(hyps))
                det_i.append({})
                hyps.append(h)
                continue
            mis_i.append(len(hyps))
            hyps.append(extend_track_misdetection(h, m.p_d, time=t, parent=s))
            dets: dict[int, int] = {}
            if m_z:
                r = h.bernoulli.r
                log_r = math.log(r) if r > 0.0 else -math.inf
                means, cov, logliks, d2 = kalman_update_batch(
                    h.bernoulli.density, z_arr, m.H, m.R
                )
                for p in np.nonzero(d2 <= params.gate_threshold)[0]:
                    p = int(p)
                    dets[p] = len(hyps)
                    hyps.append(
                        SingleTargetHypothesis(
                            BernoulliComponent(1.0, Gaussian(means[p], cov)),
                            h.log_weight + log_r + m.log_p_d + logliks[p],
                            h.assoc_history + ((t, p),),
                            s,
                        )
                    )
                    gated_any[p] = True
            det_i.append(dets)
        ext_tracks.append(Track(tr.id, tuple(hyps), tr.birth_time, tr.birth_measurement))
        mis_index.append(mis_i)
        det_index.append(det_i)

    # measurements gating nothing at all are dropped; their clutter factor is
    # common to every hypothesis and only enters the evidence
    retained = [
        p for p in range(m_z) if new_tracks[p] is not None or bool(gated_any[p])
    ]
    dropped_log_c = sum(
        m.log_clutter_density for p in range(m_z) if new_tracks[p] is None and not gated_any[p]
    )
    n_ret = len(retained)

    # per-parent ranked expansion. Selections are always built in the same
    # order (prior tracks, then new tracks by measurement), so the raw item
    # tuple is a canonical merge key.
    row_of = {p: row for row, p in enumerate(retained)}
    children: dict[tuple, list] = {}
    for g in d.global_hypotheses:
        cols: list[tuple[int, int]] = []
        base_lw = g.log_weight
        for i, tr in enumerate(d.tracks):
            s = g.selection[tr.id]
            if tr.hypotheses[s].is_nonexistent:
                continue
            cols.append((i, s))
            base_lw += (
                ext_tracks[i].hypotheses[mis_index[i][s]].log_weight
                - tr.hypotheses[s].log_weight
            )
        costs = np.full((n_ret, len(cols) + n_ret), np.inf)
        for ci, (i, s) in enumerate(cols):
            hyps = ext_tracks[i].hypotheses
            mis_lw = hyps[mis_index[i][s]].log_weight
            for p, di in det_index[i][s].items():
                costs[row_of[p], ci] = -(hyps[di].log_weight - mis_lw)
        for row in range(n_ret):
            costs[row, len(cols) + row] = -diag_lw[retained[row]]
        k = _k_allotment(params.max_globals, g.log_weight)
        for a in ranked_assignments(costs, k):
            selection = {
                tr.id: mis_index[i][g.selection[tr.id]]
                for i, tr in enumerate(d.tracks)
            }
            for row, col in enumerate(a.row_to_col):
                if col < len(cols):
                    i, s = cols[col]
                    selection[d.tracks[i].id] = det_index[i][s][retained[row]]
            for row, p in enumerate(retained):
                nt = new_tracks[p]
                if nt is not None:
                    selection[nt.id] = 1 if a.row_to_col[row] == len(cols) + row else 0
            child_lw = base_lw - a.cost
            key = tuple(selection.items())
            hit = children.get(key)
            if hit is None:
                children[key] = [child_lw, selection]
            else:
                hit[0] = float(np.logaddexp(hit[0], child_lw))

    log_mbm = log_sum_exp([v[0] for v in children.values()])
    if log_mbm == -math.inf:
        raise ValueError("every child global hypothesis has zero weight")
    log_evidence = (
        log_mbm - m.clutter_rate - m.p_d * d.poisson.total_weight() + dropped_log_c
    )
    globals_new = tuple(
        GlobalHypothesis(lw - log_mbm, sel) for lw, sel in children.values()
    )
    tracks_out = tuple(ext_tracks) + tuple(tr for tr in new_tracks if tr is not None)
    out = PmbmDensity(poisson, tracks_out, globals_new, t, next_id)
    return prune(out, params), log_evidence


def prune(d: PmbmDensity, params: FilterParams) -> PmbmDensity:
    """Poisson threshold, global-hypothesis cap, then tree cleanup (low-
    existence Bernoullis to the non-existent hypothesis, duplicate merge,
    unreferenced-hypothesis and dead-track removal)."""
    log_thr = (
        math.log(params.poisson_prune_threshold)
        if params.poisson_prune_threshold > 0.0
        else -math.inf
    )
    poisson = GaussianMixture(
        tuple(wg for wg in d.poisson if wg.log_weight >= log_thr)
    )

    order = sorted(
        range(len(d.global_hypotheses)),
        key=lambda j: (-d.global_hypotheses[j].log_weight, j),
    )
    if not math.isinf(params.max_globals):
        order = order[: int(params.max_globals)]
    keep = [d.global_hypotheses[j] for j in sorted(order)]
    total = log_sum_exp([g.log_weight for g in keep])
    if total == -math.inf:
        raise ValueError("all surviving global hypotheses have zero weight")

    by_id = {tr.id: tr for tr in d.tracks}
    thr_r = params.existence_prune_threshold
    merged: dict[tuple, list] = {}
    for g in keep:
        sel = {}
        for tid, idx in g.selection.items():
            h = by_id[tid].hypotheses[idx]
            sel[tid] = 0 if h.bernoulli.r < thr_r else idx
        lw = g.log_weight - total
        key = tuple(sorted(sel.items()))
        hit = merged.get(key)
        if hit is None:
            merged[key] = [lw, sel]
        else:
            hit[0] = float(np.logaddexp(hit[0], lw))

    referenced: dict[int, set[int]] = {tr.id: {0} for tr in d.tracks}
    for lw, sel in merged.values():
        for tid, idx in sel.items():
            referenced[tid].add(idx)

    tracks_out = []
    remap: dict[int, dict[int, int]] = {}
    dropped: set[int] = set()
    for tr in d.tracks:
        kept_idx = sorted(referenced[tr.id])
        if all(tr.hypotheses[i].is_nonexistent for i in kept_idx):
            dropped.add(tr.id)
            continue
        remap[tr.id] = {old: new for new, old in enumerate(kept_idx)}
        tracks_out.append(
            Track(
                tr.id,
                tuple(tr.hypotheses[i] for i in kept_idx),
                tr.birth_time,
                tr.birth_measurement,
            )
        )

    globals_out = tuple(
        GlobalHypothesis(
            lw,
            {tid: remap[tid][idx] for tid, idx in sel.items() if tid not in dropped},
        )
        for lw, sel in merged.values()
    )
    return PmbmDensity(poisson, tuple(tracks_out), globals_out, d.time, d.next_track_id)


def step(
    d: PmbmDensity, Z, m: LinearGaussianModel, params: FilterParams
) -> PmbmDensity:
    """One full scan: predict then update (the update prunes)."""
    return update(predict(d, m), Z, m, params)
