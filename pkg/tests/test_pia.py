import numpy as np
import pytest

from softpi import (
    ActionSpace,
    ValueGrid,
    build_quadrature,
    c2_norm_track,
    check_monotone,
    gradient,
    make_quadratic_test,
    run_pia,
)
from softpi.evaluate import NEUMANN0, dirichlet
from softpi.pia import IterationRecord, PiaConfig, PiaHistory


def _quadratic():
    space = ActionSpace(((-1.0, 1.0),))
    prob = make_quadratic_test(0.3, 0.1, 1.0, space)
    return prob, build_quadrature(space)


def test_constant_model_converges_in_two_iterations():
    prob, quad = _quadratic()
    x = np.linspace(-2, 2, 101)
    hist = run_pia(prob, quad, x)
    assert hist.converged
    assert hist.iterations <= 2
    assert hist.records[-1].sup_delta <= 1e-10


def test_gradient_stencils():
    x = np.linspace(-1, 1, 101)
    const = ValueGrid(x=x, v=np.full_like(x, 2.0), dv=x, d2v=x, bc=NEUMANN0)
    assert np.abs(gradient(const)).max() == 0.0
    linear = ValueGrid(x=x, v=x.copy(), dv=x, d2v=x, bc=NEUMANN0)
    assert np.abs(gradient(linear) - 1.0).max() <= 1e-13
    xs = np.linspace(0, 2 * np.pi, 629)
    sine = ValueGrid(x=xs, v=np.sin(xs), dv=xs, d2v=xs, bc=NEUMANN0)
    err = np.abs(gradient(sine)[1:-1] - np.cos(xs[1:-1])).max()
    assert err <= 2e-5


def test_merton_run_is_monotone_and_converges(merton, merton_quad, x_default):
    hist = run_pia(merton, merton_quad, x_default)
    assert hist.converged
    scale = np.abs(hist.grid.v).max()
    assert hist.records[-1].sup_delta <= 1e-8 * max(1.0, scale)
    assert check_monotone(hist, 1e-7 * scale) == []


def test_residual_decays_over_run(merton, merton_quad, growth, growth_quad, x_default):
    for prob, quad in ((merton, merton_quad), (growth, growth_quad)):
        hist = run_pia(prob, quad, x_default)
        first = hist.records[0].residual_sup
        final = hist.records[-1].residual_sup
        assert final <= first
        assert final <= PiaConfig().residual_tol


def test_fixed_point_restart(merton, merton_quad, x_default):
    base = run_pia(merton, merton_quad, x_default, PiaConfig(stop_tol=1e-10))
    again = run_pia(
        merton, merton_quad, x_default, PiaConfig(v0=base.grid.v.copy())
    )
    assert again.records[0].sup_delta <= 5e-8


def test_check_monotone_flags_corruption():
    prob, quad = _quadratic()
    x = np.linspace(-2, 2, 101)
    hist = run_pia(prob, quad, x)
    assert check_monotone(hist, 1e-12) == []
    broken = PiaHistory(
        records=[
            hist.records[0],
            IterationRecord(n=2, sup_delta=1.0, mono_margin=-1.0,
                            residual_sup=0.0, c2_proxy=1.0, v_sup=1.0),
        ],
        grid=hist.grid,
        snapshot=hist.snapshot,
        converged=True,
    )
    assert check_monotone(broken, 1e-7) == [2]
    with pytest.raises(ValueError):
        check_monotone(PiaHistory(records=hist.records[:1]), 1e-7)


def test_c2_track_constant_model():
    prob, quad = _quadratic()
    x = np.linspace(-2, 2, 101)
    hist = run_pia(prob, quad, x)
    track = c2_norm_track(hist)
    assert not track.flagged
    assert np.abs(track.series[1:] - track.series[-1]).max() <= 1e-12


def test_c2_track_stabilizes(merton, merton_quad, growth, growth_quad, x_default):
    for prob, quad in ((merton, merton_quad), (growth, growth_quad)):
        hist = run_pia(prob, quad, x_default)
        assert not c2_norm_track(hist).flagged


def test_divergence_guard_fires(merton, merton_quad, x_default):
    with pytest.raises(RuntimeError, match="uniform value bound"):
        run_pia(merton, merton_quad, x_default, bc=dirichlet(1e9, 1e9))


def test_not_converged_flag(merton, merton_quad, x_default):
    hist = run_pia(merton, merton_quad, x_default, PiaConfig(max_iters=1))
    assert not hist.converged
    assert hist.iterations == 1


def test_config_validation():
    with pytest.raises(ValueError):
        PiaConfig(max_iters=0)
    with pytest.raises(ValueError):
        PiaConfig(stop_tol=0.0)
    with pytest.raises(ValueError):
        PiaConfig(residual_tol=-1.0)


def test_custom_v0_array(merton, merton_quad, x_default):
    hist = run_pia(
        merton, merton_quad, x_default, PiaConfig(v0=np.full(x_default.shape, -5.0))
    )
    assert hist.converged
    with pytest.raises(ValueError):
        run_pia(merton, merton_quad, x_default, PiaConfig(v0=np.zeros(7)))
