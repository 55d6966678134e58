import math

import numpy as np
import pytest

from softpi import ActionSpace, build_quadrature
from softpi.quadrature import integrate, log_integral_exp


def test_gauss_legendre_polynomial_exactness():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)), order=5, panels=1)
    assert integrate(quad, lambda u: u**2) == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_measure_of_unit_integrand():
    quad = build_quadrature(ActionSpace(((0.05, 0.5),)))
    assert integrate(quad, lambda u: np.ones_like(u)) == pytest.approx(0.45, abs=1e-14)


def test_symmetric_union_integrates_odd_function_to_zero():
    quad = build_quadrature(ActionSpace(((-1.0, -0.5), (0.5, 1.0))))
    assert integrate(quad, lambda u: u) == pytest.approx(0.0, abs=1e-14)


def test_constant_integrand_returns_scaled_measure():
    quad = build_quadrature(ActionSpace(((-0.25, 0.5), (1.0, 1.5))))
    assert integrate(quad, lambda u: 3.0 * np.ones_like(u)) == pytest.approx(
        3.0 * 1.25, abs=1e-13
    )


def test_exponential_closed_form():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)), order=20, panels=1)
    assert integrate(quad, np.exp) == pytest.approx(math.e - 1.0, abs=1e-12)


def test_merton_reward_matches_trapezoid_oracle(merton, merton_quad):
    got = integrate(merton_quad, lambda u: np.asarray(merton.reward(0.0, u), float))
    uu = np.linspace(0.05, 0.5, 1_000_001)
    oracle = np.trapezoid(np.asarray(merton.reward(0.0, uu), float), uu)
    assert got == pytest.approx(float(oracle), abs=1e-9)


def test_weights_sum_to_measure():
    space = ActionSpace(((-2.0, -1.0), (0.0, 0.45), (1.0, 3.5)))
    for rule in ("gauss-legendre", "trapezoid"):
        quad = build_quadrature(space, rule=rule, order=8, panels=3)
        assert quad.weights.sum() == pytest.approx(space.total_measure, rel=1e-12)
        assert (quad.weights >= 0).all()
        lo_ok = quad.nodes >= space.lo - 1e-12
        hi_ok = quad.nodes <= space.hi + 1e-12
        assert lo_ok.all() and hi_ok.all()


def test_integrate_rejects_nonfinite_values():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)))
    vals = np.zeros_like(quad.nodes)
    vals[3] = np.nan
    with pytest.raises(ValueError, match="not finite"):
        integrate(quad, vals)


def test_log_integral_exp_constant():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)))
    assert log_integral_exp(quad, lambda u: 2.5 * np.ones_like(u)) == pytest.approx(
        2.5, abs=1e-13
    )
    quad45 = build_quadrature(ActionSpace(((0.05, 0.5),)))
    got = log_integral_exp(quad45, lambda u: -3.0 * np.ones_like(u))
    assert got == pytest.approx(-3.0 + math.log(0.45), abs=1e-13)


def test_log_integral_exp_huge_slope_no_overflow():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)))
    got = log_integral_exp(quad, lambda u: 1000.0 * u)
    assert math.isfinite(got)
    # a rule fine enough to resolve exp(1000 u) reproduces the closed form
    fine = build_quadrature(ActionSpace(((0.0, 1.0),)), order=16, panels=2000)
    got_fine = log_integral_exp(fine, lambda u: 1000.0 * u)
    exact = 1000.0 + math.log1p(-math.exp(-1000.0)) - math.log(1000.0)
    assert got_fine == pytest.approx(exact, abs=1e-10)


def test_log_integral_exp_shift_invariance(merton, merton_quad):
    g = np.asarray(merton.reward(0.0, merton_quad.nodes), float) / merton.lam
    base = log_integral_exp(merton_quad, g)
    for c in (-1e4, -123.456, -1.0, 0.0, 1.0, 987.125, 1e4):
        assert abs(log_integral_exp(merton_quad, g + c) - (base + c)) <= 1e-12


def test_log_integral_exp_error_paths():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)))
    n = quad.nodes.size
    with pytest.raises(ValueError, match="empty effective support"):
        log_integral_exp(quad, np.full(n, -np.inf))
    with pytest.raises(ValueError, match="NaN"):
        log_integral_exp(quad, np.full(n, np.nan))
    with pytest.raises(ValueError, match="inf"):
        bad = np.zeros(n)
        bad[0] = np.inf
        log_integral_exp(quad, bad)
    # isolated -inf entries carry zero mass and are fine
    ok = np.zeros(n)
    ok[0] = -np.inf
    assert math.isfinite(log_integral_exp(quad, ok))


def test_refinement_convergence_order_two():
    space = ActionSpace(((0.0, 1.0),))
    vals = [
        integrate(build_quadrature(space, rule="trapezoid", panels=p), np.exp)
        for p in (8, 16, 32)
    ]
    change1 = abs(vals[1] - vals[0])
    change2 = abs(vals[2] - vals[1])
    assert change2 <= change1 / 3.0


def test_build_quadrature_guards():
    space = ActionSpace(((0.0, 1.0),))
    with pytest.raises(ValueError):
        build_quadrature(space, order=1)
    with pytest.raises(ValueError):
        build_quadrature(space, panels=0)
    with pytest.raises(ValueError):
        build_quadrature(space, rule="simpson")


def test_vectorized_rows_log_integral():
    quad = build_quadrature(ActionSpace(((0.0, 1.0),)))
    rows = np.vstack([np.zeros_like(quad.nodes), 2.0 + 0.0 * quad.nodes])
    out = log_integral_exp(quad, rows)
    assert out.shape == (2,)
    assert out[0] == pytest.approx(0.0, abs=1e-13)
    assert out[1] == pytest.approx(2.0, abs=1e-13)
