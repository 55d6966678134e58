import math

import numpy as np
import pytest

from softpi import (
    ActionSpace,
    ControlProblem,
    check_action_space,
    check_ellipticity,
    estimate_lambda_k,
    estimate_theta,
    validate_problem,
)

from conftest import constant_problem


def test_single_interval_space():
    chk = check_action_space(ActionSpace(((0.05, 0.5),)))
    assert chk.leb_ok and chk.cone_ok
    assert chk.zeta == pytest.approx(0.45)
    assert chk.bad_interval is None


def test_union_space_zeta_is_min_length():
    chk = check_action_space(ActionSpace(((0.0, 0.1), (0.5, 1.0))))
    assert chk.cone_ok
    assert chk.zeta == pytest.approx(0.1)


def test_degenerate_point_space_fails():
    chk = check_action_space(ActionSpace(((0.3, 0.3),)))
    assert not chk.leb_ok
    assert not chk.cone_ok
    assert chk.bad_interval == 0


def test_theta_zero_for_u_independent_model():
    prob = constant_problem()
    assert estimate_theta(prob, -2.0, 2.0) == 0.0


def test_theta_merton_between_floor_and_ceiling(merton):
    theta = estimate_theta(merton, -6.0, 4.0, budget=8000)
    assert 1.0 <= theta <= merton.theta_ceiling + 1e-9
    assert merton.theta_ceiling == pytest.approx(1.0 + math.exp(-1.0) / 0.05, rel=1e-12)


def test_theta_growth_below_ceiling(growth):
    theta = estimate_theta(growth, -6.0, 4.0, budget=8000)
    assert theta <= growth.theta_ceiling + 1e-9


def test_theta_monotone_in_budget(merton):
    t1 = estimate_theta(merton, -6.0, 4.0, budget=1000, seed=7)
    t2 = estimate_theta(merton, -6.0, 4.0, budget=4000, seed=7)
    t3 = estimate_theta(merton, -6.0, 4.0, budget=16000, seed=7)
    assert t1 <= t2 <= t3


def test_theta_budget_floor(merton):
    with pytest.raises(ValueError):
        estimate_theta(merton, -6.0, 4.0, budget=10)


def test_ellipticity_builtin_models(merton, growth):
    xs = np.linspace(-6, 4, 201)
    ok_m, min_m = check_ellipticity(merton, xs)
    assert ok_m and min_m == pytest.approx(0.01)
    ok_g, min_g = check_ellipticity(growth, xs)
    assert ok_g and min_g == pytest.approx(0.04)


def test_ellipticity_detects_degenerate_vol():
    base = constant_problem()
    degenerate = ControlProblem(
        rho=base.rho, lam=base.lam, action_space=base.action_space,
        drift=base.drift, vol=lambda x: np.asarray(x, float), reward=base.reward,
        eta0=0.01, theta_ceiling=0.0,
    )
    ok, min_sq = check_ellipticity(degenerate, np.linspace(-1, 1, 21))
    assert not ok
    assert min_sq == pytest.approx(0.0, abs=1e-15)


def test_lambda_k_merton_ceilings(merton):
    out = estimate_lambda_k(merton, 2, -6.0, 4.0, budget=8000)
    assert out["0"]["reward"] <= 1.0 + 1e-9
    assert out["1"]["reward"] <= math.exp(-1.0) + 1e-3
    assert all(v < 1e6 for lvl in out.values() for v in lvl.values())


def test_lambda_k_growth_finite(growth):
    out = estimate_lambda_k(growth, 2, -6.0, 4.0, budget=8000)
    assert all(v < 1e6 for lvl in out.values() for v in lvl.values())


def test_lambda_k_flags_unbounded_reward():
    base = constant_problem()
    linear = ControlProblem(
        rho=base.rho, lam=base.lam, action_space=base.action_space,
        drift=base.drift, vol=base.vol,
        reward=lambda x, u: np.asarray(x, float) + 0.0 * np.asarray(u, float),
        eta0=1.0, theta_ceiling=0.0,
    )
    small = estimate_lambda_k(linear, 0, -5.0, 5.0)["0"]["reward"]
    large = estimate_lambda_k(linear, 0, -10.0, 10.0)["0"]["reward"]
    assert large > small  # grows with the domain: unbounded by construction
    report = validate_problem(linear, -2e6, 2e6)
    assert not report.lambda_k_finite
    assert not report.passed


def test_validate_passes_builtin_models(merton, growth):
    for prob in (merton, growth):
        report = validate_problem(prob, -6.0, 4.0)
        assert report.passed
        assert report.leb_ok and report.cone_ok and report.ellipticity_ok
        assert report.theta_sampled <= report.theta_ceiling + 1e-9


def test_validate_fails_injected_violations():
    # zero-measure action set
    base = constant_problem()
    degenerate_u = ControlProblem(
        rho=base.rho, lam=base.lam,
        action_space=ActionSpace(((0.3, 0.3),)),
        drift=base.drift, vol=base.vol, reward=base.reward,
        eta0=1.0, theta_ceiling=0.0,
    )
    assert not validate_problem(degenerate_u, -2.0, 2.0).passed
    # vol touching zero
    degenerate_sig = ControlProblem(
        rho=base.rho, lam=base.lam, action_space=base.action_space,
        drift=base.drift, vol=lambda x: np.asarray(x, float), reward=base.reward,
        eta0=0.01, theta_ceiling=0.0,
    )
    assert not validate_problem(degenerate_sig, -1.0, 1.0).passed


def test_report_json_roundtrip(merton):
    import json

    report = validate_problem(merton, -6.0, 4.0)
    parsed = json.loads(report.to_json())
    assert parsed["passed"] is True
    assert parsed["zeta"] == pytest.approx(0.45)
