import math

import numpy as np
import pytest

from pmbm.density import check_density, normalize
from pmbm.validation import (
    CheckResult,
    check_conjugacy,
    check_likelihood_equivalence,
    check_mbm01,
    check_murty,
    compare_update,
    random_tiny_instance,
    run_checks,
    tiny_to_density,
)


@pytest.fixture(scope="module")
def all_results():
    return run_checks()


def test_every_check_passes(all_results):
    assert len(all_results) == 4
    names = [r.name for r in all_results]
    assert names == ["likelihood_equivalence", "conjugacy", "murty", "mbm01"]
    for r in all_results:
        assert r.passed, r.line()
        assert r.cases > 0


def test_result_line_format(all_results):
    line = all_results[0].line()
    assert line.startswith("[pass] likelihood_equivalence:")
    assert "cases" in line and "worst error" in line
    failing = CheckResult("x", False, 3, 0.5, "broken")
    assert failing.line().startswith("[FAIL] x:")


def test_name_filter_selects_subset():
    out = run_checks("murty")
    assert [r.name for r in out] == ["murty"]
    assert run_checks("no-such-check") == []


def test_perturbation_is_detected():
    # the same checks must fail once an artificial error is injected,
    # otherwise they could not detect a real one
    for r in run_checks(perturb=1e-3):
        assert not r.passed, r.line()


def test_individual_checks_small_budgets():
    assert check_likelihood_equivalence(cases=5, seed=10).passed
    assert check_conjugacy(cases=3, seed=11).passed
    assert check_murty(cases=5, seed=12).passed
    assert check_mbm01(cases=5, seed=13).passed


def test_compare_update_on_fresh_instances():
    rng = np.random.default_rng(99)
    for _ in range(5):
        t = random_tiny_instance(rng)
        out = compare_update(t)
        assert out["weight_error"] <= 1e-10
        assert out["param_error"] <= 1e-8
        assert out["evidence_error"] <= 1e-8
        assert out["events"] >= 1
        assert math.isfinite(out["log_evidence_oracle"])


def test_tiny_to_density_is_well_formed():
    rng = np.random.default_rng(100)
    for _ in range(10):
        t = random_tiny_instance(rng)
        d = tiny_to_density(t)
        check_density(normalize(d))
        assert len(d.tracks) == len(t.bernoullis)
        for tr in d.tracks:
            assert tr.hypotheses[0].is_nonexistent
        n_globals = len(d.global_hypotheses)
        expected = 1
        for hs in t.bernoullis:
            expected *= len(hs)
        assert n_globals == expected
