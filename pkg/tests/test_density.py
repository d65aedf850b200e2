import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmbm.density import (
    MISS,
    BernoulliComponent,
    GlobalHypothesis,
    PmbmDensity,
    SingleTargetHypothesis,
    Track,
    cardinality_distribution,
    check_density,
    check_measurement_partition,
    density_to_json,
    empty_mbm,
    flatten_mbm,
    mbm_cardinality,
    mbm_to_mbm01,
    mbm_union,
    Mbm,
    MbmHypothesis,
    nonexistent_hypothesis,
    normalize,
    selected_bernoullis,
)
from pmbm.gaussian import Gaussian, GaussianMixture

G1 = Gaussian([0.0], [[1.0]])


def hyp(r, lw=0.0, history=()):
    return SingleTargetHypothesis(BernoulliComponent(r, G1), lw, history)


def track(tid, *rs, t0=1):
    """Track with the non-existent hypothesis plus one per existence value."""
    hyps = [nonexistent_hypothesis(G1)]
    for s, r in enumerate(rs):
        hyps.append(hyp(r, 0.0, ((t0, 10 * tid + s),)))
    return Track(tid, tuple(hyps), t0, 0)


def single_global_density(*rs):
    tracks = tuple(track(i, r) for i, r in enumerate(rs))
    g = GlobalHypothesis(0.0, {t.id: 1 for t in tracks})
    return PmbmDensity(GaussianMixture(), tracks, (g,), 1, len(rs))


def test_bernoulli_rejects_bad_existence():
    with pytest.raises(ValueError):
        BernoulliComponent(1.5, G1)
    with pytest.raises(ValueError):
        BernoulliComponent(-0.1, G1)


def test_hypothesis_history_must_increase_in_time():
    hyp(0.5, history=((1, 0), (3, 2)))
    with pytest.raises(ValueError):
        hyp(0.5, history=((3, 0), (1, 2)))
    with pytest.raises(ValueError):
        hyp(0.5, history=((2, 0), (2, 1)))


def test_nonexistent_hypothesis_properties():
    h = nonexistent_hypothesis(G1)
    assert h.is_nonexistent
    assert h.bernoulli.r == 0.0
    assert h.log_weight == 0.0
    assert not hyp(0.5, history=((1, 0),)).is_nonexistent


def test_track_needs_a_hypothesis():
    with pytest.raises(ValueError):
        Track(0, (), 1, 0)


def test_density_validates_selections():
    t = track(0, 0.5)
    with pytest.raises(ValueError):  # unknown track id in selection
        PmbmDensity(GaussianMixture(), (t,), (GlobalHypothesis(0.0, {1: 0}),))
    with pytest.raises(ValueError):  # hypothesis index out of range
        PmbmDensity(GaussianMixture(), (t,), (GlobalHypothesis(0.0, {0: 2}),))
    with pytest.raises(ValueError):  # duplicate ids
        PmbmDensity(GaussianMixture(), (t, t), ())


def test_empty_density():
    d = PmbmDensity.empty()
    assert d.tracks == ()
    assert len(d.global_hypotheses) == 1
    assert d.global_hypotheses[0].log_weight == 0.0
    check_density(d)


def test_normalize_shifts_to_unit_mass():
    t = track(0, 0.5, 0.7)
    gs = (
        GlobalHypothesis(2.0, {0: 1}),
        GlobalHypothesis(1.0, {0: 2}),
    )
    d = normalize(PmbmDensity(GaussianMixture(), (t,), gs))
    total = sum(math.exp(g.log_weight) for g in d.global_hypotheses)
    assert total == pytest.approx(1.0)
    ratio = d.global_hypotheses[0].log_weight - d.global_hypotheses[1].log_weight
    assert ratio == pytest.approx(1.0)
    # input with an exactly-zero log total comes back unchanged
    exact = PmbmDensity(
        GaussianMixture(),
        (t,),
        (
            GlobalHypothesis(math.log(0.5), {0: 1}),
            GlobalHypothesis(math.log(0.5), {0: 2}),
        ),
    )
    assert normalize(exact) is exact


def test_normalize_rejects_degenerate():
    with pytest.raises(ValueError):
        normalize(PmbmDensity(GaussianMixture()))
    t = track(0, 0.5)
    bad = PmbmDensity(
        GaussianMixture(), (t,), (GlobalHypothesis(-math.inf, {0: 1}),)
    )
    with pytest.raises(ValueError):
        normalize(bad)


def test_selected_bernoullis_in_id_order():
    tracks = (track(3, 0.3), track(1, 0.1))
    g = GlobalHypothesis(0.0, {3: 1, 1: 1})
    out = selected_bernoullis(g, tracks)
    assert [tid for tid, _ in out] == [1, 3]
    assert [b.r for _, b in out] == [0.1, 0.3]


def test_mbm01_three_bernoulli_example():
    # r = 0.8, 0.2, 1.0: two fractional components branch, the certain one
    # appears everywhere, so 2^2 = 4 components
    d = single_global_density(0.8, 0.2, 1.0)
    comps = mbm_to_mbm01(d.global_hypotheses, d.tracks)
    assert len(comps) == 4
    weights = sorted(math.exp(c.log_weight) for c in comps)
    assert weights == pytest.approx(
        sorted([0.2 * 0.8, 0.8 * 0.8, 0.2 * 0.2, 0.8 * 0.2])
    )
    assert sum(weights) == pytest.approx(1.0)
    sizes = sorted(len(c.deterministic_targets) for c in comps)
    assert sizes == [1, 2, 2, 3]
    assert all(c.hypothesis_index == 0 for c in comps)


def test_mbm01_zero_existence_never_appears():
    d = single_global_density(0.0, 1.0)
    comps = mbm_to_mbm01(d.global_hypotheses, d.tracks)
    assert len(comps) == 1
    assert len(comps[0].deterministic_targets) == 1
    assert comps[0].log_weight == pytest.approx(0.0)


def test_mbm01_counts_per_hypothesis():
    t0, t1 = track(0, 0.8, 1.0), track(1, 0.2)
    gs = (
        GlobalHypothesis(math.log(0.6), {0: 1, 1: 1}),  # two fractional -> 4
        GlobalHypothesis(math.log(0.4), {0: 2, 1: 0}),  # r = 1 only -> 1
    )
    d = PmbmDensity(GaussianMixture(), (t0, t1), gs, 1, 2)
    comps = mbm_to_mbm01(d.global_hypotheses, d.tracks)
    assert len(comps) == 4 + 1
    by_hyp = {}
    for c in comps:
        by_hyp.setdefault(c.hypothesis_index, []).append(c)
    assert len(by_hyp[0]) == 4 and len(by_hyp[1]) == 1
    # expansion conserves each hypothesis' mass
    for j, g in enumerate(gs):
        mass = sum(math.exp(c.log_weight) for c in by_hyp[j])
        assert mass == pytest.approx(math.exp(g.log_weight))


def test_cardinality_three_bernoulli_example():
    d = single_global_density(0.8, 0.2, 1.0)
    pmf = cardinality_distribution(d.global_hypotheses, d.tracks)
    np.testing.assert_allclose(pmf.probabilities, [0.0, 0.16, 0.68, 0.16], atol=1e-12)
    assert pmf.map_estimate() == 2


def test_cardinality_ignores_zero_existence():
    a = single_global_density(0.8, 0.2)
    b = single_global_density(0.8, 0.0, 0.2, 0.0)
    pa = cardinality_distribution(a.global_hypotheses, a.tracks).probabilities
    pb = cardinality_distribution(b.global_hypotheses, b.tracks).probabilities
    np.testing.assert_allclose(pa, pb[: pa.size], atol=1e-15)
    np.testing.assert_allclose(pb[pa.size :], 0.0, atol=1e-15)


def test_cardinality_map_tie_goes_low():
    # single r = 0.5 target: P(0) = P(1) = 0.5
    d = single_global_density(0.5)
    assert cardinality_distribution(d.global_hypotheses, d.tracks).map_estimate() == 0


@settings(max_examples=30)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6))
def test_cardinality_matches_mbm01_masses(rs):
    d = single_global_density(*rs)
    pmf = cardinality_distribution(d.global_hypotheses, d.tracks)
    comps = mbm_to_mbm01(d.global_hypotheses, d.tracks)
    by_n = np.zeros(len(rs) + 1)
    for c in comps:
        by_n[len(c.deterministic_targets)] += math.exp(c.log_weight)
    probs = np.zeros(len(rs) + 1)
    probs[: pmf.probabilities.size] = pmf.probabilities
    np.testing.assert_allclose(probs, by_n, atol=1e-9)


def test_mbm_union_cardinality_convolves():
    a = single_global_density(0.8, 0.2)
    b = single_global_density(0.5)
    ma = flatten_mbm(a.global_hypotheses, a.tracks)
    mb = flatten_mbm(b.global_hypotheses, b.tracks)
    pa = mbm_cardinality(ma).probabilities
    pb = mbm_cardinality(mb).probabilities
    pu = mbm_cardinality(mbm_union(ma, mb)).probabilities
    np.testing.assert_allclose(pu, np.convolve(pa, pb), atol=1e-12)
    # union with the empty MBM changes nothing
    pe = mbm_cardinality(mbm_union(ma, empty_mbm())).probabilities
    np.testing.assert_allclose(pe, pa, atol=1e-15)


def test_flatten_matches_cardinality_distribution():
    t0, t1 = track(0, 0.8, 1.0), track(1, 0.2)
    gs = (
        GlobalHypothesis(math.log(0.6), {0: 1, 1: 1}),
        GlobalHypothesis(math.log(0.4), {0: 2, 1: 0}),
    )
    d = PmbmDensity(GaussianMixture(), (t0, t1), gs, 1, 2)
    via_flat = mbm_cardinality(flatten_mbm(d.global_hypotheses, d.tracks))
    direct = cardinality_distribution(d.global_hypotheses, d.tracks)
    np.testing.assert_allclose(
        via_flat.probabilities, direct.probabilities, atol=1e-12
    )


def test_measurement_partition_detects_double_use():
    shared = ((1, 5),)
    t0 = Track(0, (nonexistent_hypothesis(G1), hyp(0.5, history=shared)), 1, 5)
    t1 = Track(1, (nonexistent_hypothesis(G1), hyp(0.5, history=shared)), 1, 5)
    g = GlobalHypothesis(0.0, {0: 1, 1: 1})
    d = PmbmDensity(GaussianMixture(), (t0, t1), (g,), 1, 2)
    with pytest.raises(AssertionError):
        check_measurement_partition(d)
    # misses never collide
    m0 = Track(0, (nonexistent_hypothesis(G1), hyp(0.5, history=((1, MISS),))), 1, 0)
    m1 = Track(1, (nonexistent_hypothesis(G1), hyp(0.5, history=((1, MISS),))), 1, 0)
    ok = PmbmDensity(
        GaussianMixture(), (m0, m1), (GlobalHypothesis(0.0, {0: 1, 1: 1}),), 1, 2
    )
    check_measurement_partition(ok)


def test_check_density_flags_unnormalized_weights():
    d = single_global_density(0.5)
    bad = PmbmDensity(
        d.poisson, d.tracks, (GlobalHypothesis(1.0, {0: 1}),), d.time, d.next_track_id
    )
    with pytest.raises(AssertionError):
        check_density(bad)


def test_check_density_flags_misplaced_nonexistent():
    t = Track(0, (hyp(0.5, history=((1, 0),)),), 1, 0)
    d = PmbmDensity(GaussianMixture(), (t,), (GlobalHypothesis(0.0, {0: 0}),), 1, 1)
    with pytest.raises(AssertionError):
        check_density(d)


def test_density_to_json_structure():
    d = single_global_density(0.8, 0.2)
    out = density_to_json(d)
    assert set(out) == {"time", "poisson", "tracks", "globals"}
    assert out["time"] == 1
    assert len(out["tracks"]) == 2
    h = out["tracks"][0]["hypotheses"][1]
    assert h["r"] == 0.8
    assert h["history"] == [[1, 0]]
    assert out["globals"][0]["selection"] == {"0": 1, "1": 1}
    import json

    json.dumps(out)  # everything JSON-serializable


def test_mbm_cardinality_mixed_lengths():
    m = Mbm(
        (
            MbmHypothesis(math.log(0.5), (BernoulliComponent(1.0, G1),) * 2),
            MbmHypothesis(math.log(0.5), ()),
        )
    )
    np.testing.assert_allclose(
        mbm_cardinality(m).probabilities, [0.5, 0.0, 0.5], atol=1e-12
    )
