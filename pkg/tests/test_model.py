import math

import numpy as np
import pytest

from softpi import (
    ActionSpace,
    GrowthParams,
    MertonParams,
    build_quadrature,
    gibbs_snapshot,
    hatted,
    make_growth,
    make_merton,
    make_quadratic_test,
)
from softpi.quadrature import integrate, log_integral_exp


def test_merton_drift_is_constant_in_x():
    p = make_merton(MertonParams(rf=0.03, prem=0.05, frac_eta=0.5, vol_a=0.2), 0.1, 0.5)
    for x in (-3.0, 0.0, 2.0):
        for u in (0.05, 0.3, 0.5):
            assert p.drift(x, u) == pytest.approx(0.05 - u, abs=1e-15)


def test_merton_vol_and_measure():
    p = make_merton(MertonParams(), 0.1, 0.5)
    assert float(p.vol(1.7)) == pytest.approx(0.1, abs=1e-15)
    assert p.action_space.total_measure == pytest.approx(0.45, abs=1e-15)
    assert p.eta0 == pytest.approx(0.01, abs=1e-15)


def test_merton_reward_closed_form():
    p = make_merton(MertonParams(risk_alpha=1.0), 0.1, 0.5)
    assert float(p.reward(0.0, 0.05)) == pytest.approx(-math.exp(-0.05), abs=1e-12)
    assert float(p.reward(0.0, 0.05)) == pytest.approx(-0.951229, abs=1e-6)


def test_merton_reward_bounds_sampled(merton):
    xs = np.linspace(-6, 4, 101)[:, None]
    us = np.linspace(0.05, 0.5, 21)[None, :]
    r = merton.reward(xs, us)
    assert np.abs(r).max() <= 1.0 + 1e-12
    h = 1e-5
    drdx = (merton.reward(xs + h, us) - merton.reward(xs - h, us)) / (2 * h)
    assert np.abs(drdx).max() <= math.exp(-1.0) + 1e-6
    drdu = (merton.reward(xs, us + h) - merton.reward(xs, us - h)) / (2 * h)
    assert np.abs(drdu).max() <= math.exp(-1.0) / 0.05 + 1e-6


def test_merton_rejects_empty_action_interval():
    with pytest.raises(ValueError):
        MertonParams(c_floor=0.5, frac_eta=0.5)


def test_growth_drift_example():
    p = make_growth(GrowthParams(mu_dep=0.05, vol_a=0.2, prod_theta=1.0), 0.1, 0.5)
    # f(e^0)/e^0 = 0.5, then minus mu, a^2/2 and u
    assert float(p.drift(0.0, 0.5)) == pytest.approx(-0.07, abs=1e-12)


def test_growth_drift_far_right_limit():
    p = make_growth(GrowthParams(mu_dep=0.05, vol_a=0.2, prod_theta=1.0), 0.1, 0.5)
    assert float(p.drift(30.0, 0.3)) == pytest.approx(-0.05 - 0.02 - 0.3, abs=1e-8)


def test_growth_production_part_bounded_by_theta():
    theta = 1.7
    p = make_growth(GrowthParams(prod_theta=theta), 0.1, 0.5)
    xs = np.linspace(-40, 40, 4001)
    part = np.asarray(p.drift(xs, 0.0), float) + 0.05 + 0.5 * 0.2**2
    assert np.abs(part).max() <= theta + 1e-12


def test_growth_drift_x_derivative_bound():
    theta = 1.0
    p = make_growth(GrowthParams(prod_theta=theta), 0.1, 0.5)
    xs = np.linspace(-10, 10, 2001)
    h = 1e-5
    d = (np.asarray(p.drift(xs + h, 0.3)) - np.asarray(p.drift(xs - h, 0.3))) / (2 * h)
    assert np.abs(d).max() <= theta / 4 + 1e-8


def test_growth_rejects_nonpositive_theta():
    with pytest.raises(ValueError):
        GrowthParams(prod_theta=0.0)
    with pytest.raises(ValueError):
        GrowthParams(prod_theta=-1.0)


def test_ellipticity_floor_holds_on_domain(merton, growth):
    xs = np.linspace(-6, 4, 401)
    for p in (merton, growth):
        sig2 = np.broadcast_to(np.asarray(p.vol(xs), float), xs.shape) ** 2
        assert sig2.min() >= p.eta0 - 1e-15


def test_problem_parameter_guards():
    space = ActionSpace(((0.0, 1.0),))
    with pytest.raises(ValueError):
        make_quadratic_test(0.0, rho=-0.1, lam=0.5, space=space)
    with pytest.raises(ValueError):
        make_quadratic_test(0.0, rho=0.1, lam=0.0, space=space)
    with pytest.raises(ValueError):
        make_quadratic_test(0.0, rho=0.1, lam=0.5, space=space, eta0=0.0)
    two = ActionSpace(((0.0, 0.4), (0.6, 1.0)))
    with pytest.raises(ValueError):
        make_quadratic_test(0.0, rho=0.1, lam=0.5, space=two)


def test_action_space_validation():
    with pytest.raises(ValueError):
        ActionSpace(())
    with pytest.raises(ValueError):
        ActionSpace(((0.0, 1.0), (0.5, 2.0)))
    with pytest.raises(ValueError):
        ActionSpace(((1.0, 0.0),))
    sp = ActionSpace(((0.0, 0.1), (0.5, 1.0)))
    assert sp.total_measure == pytest.approx(0.6)
    assert sp.min_interval_length == pytest.approx(0.1)
    assert (sp.lo, sp.hi) == (0.0, 1.0)
    # degenerate single point is representable
    assert ActionSpace(((0.3, 0.3),)).total_measure == 0.0


def test_quadratic_entropy_dominated_limit_is_uniform():
    space = ActionSpace(((-1.0, 1.0),))
    p = make_quadratic_test(0.0, 0.1, 1e9, space)
    quad = build_quadrature(space)
    snap = gibbs_snapshot(p, quad, np.zeros(1), np.zeros(1))
    dens = snap.density()[0]
    assert np.abs(dens - 0.5).max() <= 1e-6


def test_quadratic_entropy_two_integral_routes_agree():
    space = ActionSpace(((-1.0, 1.0),))
    p = make_quadratic_test(0.0, 0.1, 1.0, space)
    quad = build_quadrature(space)
    snap = gibbs_snapshot(p, quad, np.zeros(3), np.array([0.0, 0.4, -0.8]))
    co = hatted(p, quad, snap)
    alt = co.b_hat * snap.y + co.r_hat - p.lam * snap.log_z
    assert np.abs(co.h_hat - alt).max() <= 1e-10


def test_quadratic_partition_matches_simpson_oracle():
    space = ActionSpace(((-1.0, 1.0),))
    lam, ystar = 0.7, 0.3
    p = make_quadratic_test(ystar, 0.1, lam, space)
    quad = build_quadrature(space)
    for y in (0.0, 1.2, -0.5):
        log_z = log_integral_exp(
            quad, (np.asarray(p.drift(0.0, quad.nodes)) * y + p.reward(0.0, quad.nodes)) / lam
        )
        # composite Simpson, 1e6 intervals
        n = 1_000_000
        uu = np.linspace(-1.0, 1.0, n + 1)
        f = np.exp((uu * y - (uu - ystar) ** 2) / lam)
        h = 2.0 / n
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        z_oracle = h / 3.0 * float(f @ w)
        assert math.exp(log_z) == pytest.approx(z_oracle, rel=1e-10)


def test_quadratic_reward_integrates_against_quadrature():
    space = ActionSpace(((-1.0, 1.0),))
    p = make_quadratic_test(0.25, 0.1, 1.0, space)
    quad = build_quadrature(space)
    got = integrate(quad, lambda u: np.asarray(p.reward(0.0, u), float))
    # integral of -(u - 1/4)^2 over [-1, 1]
    exact = -(2.0 / 3.0 + 2.0 * 0.25**2)
    assert got == pytest.approx(exact, abs=1e-13)
