"""Model primitives for entropy-regularized control of a 1-D diffusion.

A :class:`ControlProblem` bundles the discount rate, the entropy weight, the
action space U, and the model functions b(x, u), sigma(x), r(x, u).  All model
functions must accept numpy arrays and broadcast, must be pure, and must be
total on (working domain) x U.  Problems are immutable after construction and
safe to share across threads.

Two consumption models ship with the package (log-wealth with a fixed risky
fraction, and capital per capita with a saturating production function),
plus a synthetic quadratic-reward model used for near-closed-form checks.
Default parameter values below are package choices for the examples and test
suite; the model families themselves only fix the functional forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ActionSpace",
    "ControlProblem",
    "MertonParams",
    "GrowthParams",
    "make_merton",
    "make_growth",
    "make_quadratic_test",
    "default_merton",
    "default_growth",
]


@dataclass(frozen=True)
class ActionSpace:
    """Finite union of closed intervals [lo_i, hi_i], sorted and disjoint.

    Zero-length intervals are representable (so the validator can flag a
    degenerate space instead of crashing), but every built-in model
    constructor rejects them.
    """

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not ivs:
            raise ValueError("action space needs at least one interval")
        for k, (lo, hi) in enumerate(ivs):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"interval {k} is not finite")
            if hi < lo:
                raise ValueError(f"interval {k} has hi < lo")
        for k in range(1, len(ivs)):
            if ivs[k][0] <= ivs[k - 1][1]:
                raise ValueError(f"intervals {k - 1} and {k} overlap or touch")
        object.__setattr__(self, "intervals", ivs)

    @property
    def total_measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    @property
    def min_interval_length(self) -> float:
        return float(min(hi - lo for lo, hi in self.intervals))

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]


@dataclass(frozen=True)
class ControlProblem:
    """Immutable bundle of model primitives.

    ``eta0`` is the declared ellipticity floor for vol(x)**2.  It is a
    contract checked by the validate module, not inferred from ``vol``, so a
    problem can deliberately declare a floor its volatility does not meet.
    ``theta_ceiling`` optionally records an analytic upper bound for the
    Lipschitz-in-u constant of reward plus drift; the entropy-growth bounds
    in the gibbs module need some such constant to be supplied.
    """

    rho: float
    lam: float
    action_space: ActionSpace
    drift: Callable
    vol: Callable
    reward: Callable
    eta0: float
    theta_ceiling: Optional[float] = None
    label: str = "custom"

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("discount rate rho must be positive")
        if not self.lam > 0:
            raise ValueError("entropy weight lam must be positive")
        if not self.eta0 > 0:
            raise ValueError("ellipticity floor eta0 must be positive")


@dataclass(frozen=True)
class MertonParams:
    """Log-wealth consumption model parameters.

    rf: riskfree rate, prem: risk premium, vol_a: asset volatility,
    frac_eta: fixed fraction of wealth held in the risky asset,
    risk_alpha: exponential-utility curvature, c_floor: subsistence
    consumption fraction.  Requires c_floor < 1 - frac_eta so the action
    interval is nonempty.
    """

    rf: float = 0.03
    prem: float = 0.05
    vol_a: float = 0.2
    frac_eta: float = 0.5
    risk_alpha: float = 1.0
    c_floor: float = 0.05

    def __post_init__(self):
        if not self.rf > 0:
            raise ValueError("rf must be positive")
        if self.prem < 0:
            raise ValueError("prem must be nonnegative")
        if not self.vol_a > 0:
            raise ValueError("vol_a must be positive")
        if not 0.0 < self.frac_eta < 1.0:
            raise ValueError("frac_eta must lie in (0, 1)")
        if not self.risk_alpha > 0:
            raise ValueError("risk_alpha must be positive")
        if not self.c_floor > 0:
            raise ValueError("c_floor must be positive")
        if self.c_floor >= 1.0 - self.frac_eta:
            raise ValueError("c_floor >= 1 - frac_eta leaves an empty action space")


@dataclass(frozen=True)
class GrowthParams:
    """Capital-per-capita consumption model parameters.

    The production function is fixed to f(z) = prod_theta * z / (1 + z),
    which is strictly increasing and strictly concave with f(0) = 0,
    f'(0+) = prod_theta, f'(inf) = 0, f''(0+) = -2 * prod_theta, and
    z * f''(z) -> 0, so all curvature requirements hold analytically.
    """

    mu_dep: float = 0.05
    vol_a: float = 0.2
    risk_alpha: float = 1.0
    c_floor: float = 0.05
    prod_theta: float = 1.0

    def __post_init__(self):
        if not self.mu_dep > 0:
            raise ValueError("mu_dep must be positive")
        if not self.vol_a > 0:
            raise ValueError("vol_a must be positive")
        if not self.risk_alpha > 0:
            raise ValueError("risk_alpha must be positive")
        if not 0.0 < self.c_floor < 1.0:
            raise ValueError("c_floor must lie in (0, 1)")
        if not self.prod_theta > 0:
            raise ValueError("prod_theta must be positive")


def _exp_utility_reward(risk_alpha):
    def reward(x, u):
        x = np.asarray(x, float)
        u = np.asarray(u, float)
        return -np.exp(-risk_alpha * u * np.exp(x))

    return reward


def make_merton(p: MertonParams, rho: float, lam: float) -> ControlProblem:
    """Log-wealth consumption problem with exponential utility.

    In log wealth x the state drift is rf + prem*eta - (a*eta)**2/2 - u,
    constant in x, the volatility is a*eta, and the running reward is
    -exp(-alpha*u*exp(x)) for consumption fraction u in [c_floor, 1-eta].
    The Lipschitz-in-u ceiling 1 + exp(-1)/c_floor follows from
    |d/du reward| = alpha*exp(x)*exp(-alpha*u*exp(x)) <= 1/(e*u).
    """
    base = p.rf + p.prem * p.frac_eta - 0.5 * (p.vol_a * p.frac_eta) ** 2
    sig = p.vol_a * p.frac_eta

    def drift(x, u):
        return (base - np.asarray(u, float)) + 0.0 * np.asarray(x, float)

    def vol(x):
        return sig + 0.0 * np.asarray(x, float)

    space = ActionSpace(((p.c_floor, 1.0 - p.frac_eta),))
    return ControlProblem(
        rho=rho,
        lam=lam,
        action_space=space,
        drift=drift,
        vol=vol,
        reward=_exp_utility_reward(p.risk_alpha),
        eta0=sig * sig,
        theta_ceiling=1.0 + math.exp(-1.0) / p.c_floor,
        label="merton",
    )


def make_growth(p: GrowthParams, rho: float, lam: float) -> ControlProblem:
    """Capital-per-capita consumption problem in log coordinates.

    With f(z) = theta*z/(1+z), the log-state drift simplifies to
    theta/(1 + exp(x)) - mu_dep - a**2/2 - u, which is bounded by theta in
    absolute value of its x-dependent part.  Volatility is the constant a
    and the reward is the same exponential utility as the wealth model,
    with u in [c_floor, 1].
    """
    if not p.prod_theta > 0:
        raise ValueError("prod_theta must be positive")
    shift = p.mu_dep + 0.5 * p.vol_a ** 2
    theta = p.prod_theta
    a = p.vol_a

    def drift(x, u):
        x = np.asarray(x, float)
        u = np.asarray(u, float)
        return theta / (1.0 + np.exp(x)) - shift - u

    def vol(x):
        return a + 0.0 * np.asarray(x, float)

    space = ActionSpace(((p.c_floor, 1.0),))
    return ControlProblem(
        rho=rho,
        lam=lam,
        action_space=space,
        drift=drift,
        vol=vol,
        reward=_exp_utility_reward(p.risk_alpha),
        eta0=a * a,
        theta_ceiling=1.0 + math.exp(-1.0) / p.c_floor,
        label="growth",
    )


def make_quadratic_test(
    y_star: float,
    rho: float,
    lam: float,
    space: ActionSpace,
    eta0: float = 1.0,
) -> ControlProblem:
    """Synthetic model with b(x, u) = u, sigma = 1, r(x, u) = -(u - y_star)**2.

    The Gibbs density at gradient y is proportional to
    exp((u*y - (u - y_star)**2) / lam) on U, a truncated Gaussian, which makes
    near-closed-form cross checks possible.  ``eta0`` defaults to the true
    floor vol**2 = 1; declaring a larger value is the supported way to produce
    an ellipticity-check failure from a config file.
    """
    if len(space.intervals) != 1:
        raise ValueError("quadratic test model expects a single interval")
    if not eta0 > 0:
        raise ValueError("eta0 must be positive")
    ys = float(y_star)

    def drift(x, u):
        return np.asarray(u, float) + 0.0 * np.asarray(x, float)

    def vol(x):
        return 1.0 + 0.0 * np.asarray(x, float)

    def reward(x, u):
        u = np.asarray(u, float)
        return -((u - ys) ** 2) + 0.0 * np.asarray(x, float)

    span = max(abs(space.lo - ys), abs(space.hi - ys))
    return ControlProblem(
        rho=rho,
        lam=lam,
        action_space=space,
        drift=drift,
        vol=vol,
        reward=reward,
        eta0=eta0,
        theta_ceiling=1.0 + 2.0 * span,
        label="quadratic",
    )


def default_merton(rho: float = 0.1, lam: float = 0.5) -> ControlProblem:
    """Wealth model with the package default parameters."""
    return make_merton(MertonParams(), rho, lam)


def default_growth(rho: float = 0.1, lam: float = 0.5) -> ControlProblem:
    """Growth model with the package default parameters."""
    return make_growth(GrowthParams(), rho, lam)
