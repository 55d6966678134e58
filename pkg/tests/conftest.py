import numpy as np
import pytest

from softpi import (
    ActionSpace,
    ControlProblem,
    build_quadrature,
    default_growth,
    default_merton,
)


@pytest.fixture(scope="session")
def merton():
    return default_merton()


@pytest.fixture(scope="session")
def merton_quad(merton):
    return build_quadrature(merton.action_space)


@pytest.fixture(scope="session")
def growth():
    return default_growth()


@pytest.fixture(scope="session")
def growth_quad(growth):
    return build_quadrature(growth.action_space)


@pytest.fixture(scope="session")
def x_default():
    return np.linspace(-6.0, 4.0, 801)


def constant_problem(c_reward=-1.0, c_drift=0.0, u_lo=0.0, u_hi=1.0,
                     rho=0.1, lam=0.5, vol=1.0):
    """Problem whose drift and reward ignore both x and u."""

    def drift(x, u):
        return c_drift + 0.0 * np.asarray(x, float) + 0.0 * np.asarray(u, float)

    def rew(x, u):
        return c_reward + 0.0 * np.asarray(x, float) + 0.0 * np.asarray(u, float)

    def volf(x):
        return vol + 0.0 * np.asarray(x, float)

    return ControlProblem(
        rho=rho,
        lam=lam,
        action_space=ActionSpace(((u_lo, u_hi),)),
        drift=drift,
        vol=volf,
        reward=rew,
        eta0=vol * vol,
        theta_ceiling=0.0,
        label="constant",
    )
