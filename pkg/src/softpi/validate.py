"""Standing-assumption checks for a control problem.

Everything here is a sampled estimate over the truncated working domain, not
a proof: suprema are reported together with their sampling budgets, and
models may carry analytic ceilings that the sampler cross-checks.  Samples
are drawn row by row from a seeded uniform matrix, so enlarging the budget
extends the sample set and the reported suprema are monotone in the budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .model import ActionSpace, ControlProblem

__all__ = [
    "ActionSpaceCheck",
    "AssumptionReport",
    "check_action_space",
    "estimate_theta",
    "check_ellipticity",
    "estimate_lambda_k",
    "validate_problem",
]

_BLOWUP = 1e6
_FD_STEP = 1e-3


@dataclass(frozen=True)
class ActionSpaceCheck:
    leb_ok: bool
    cone_ok: bool
    zeta: float
    bad_interval: Optional[int]


@dataclass
class AssumptionReport:
    """Summary of all checks; ``passed`` aggregates the individual flags."""

    leb_ok: bool
    total_measure: float
    cone_ok: bool
    zeta: float
    bad_interval: Optional[int]
    theta_sampled: float
    theta_ceiling: Optional[float]
    ellipticity_ok: bool
    min_vol_sq: float
    eta0: float
    lambda_k: dict
    lambda_k_finite: bool
    budget: int
    passed: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def check_action_space(space: ActionSpace) -> ActionSpaceCheck:
    """Positive finite measure plus the one-sided-interval condition.

    For a scalar action set, every point of U must have a full subinterval of
    some fixed length zeta on at least one side; for interval unions this
    holds with zeta equal to the minimal interval length, so the check
    reduces to flagging zero-length intervals.  ``bad_interval`` names the
    first offender instead of raising, so a report can be produced for a
    deliberately broken space.
    """
    bad = None
    for k, (lo, hi) in enumerate(space.intervals):
        if hi - lo <= 0.0:
            bad = k
            break
    measure = space.total_measure
    leb_ok = bool(0.0 < measure < math.inf)
    zeta = space.min_interval_length
    return ActionSpaceCheck(
        leb_ok=leb_ok, cone_ok=bool(zeta > 0.0), zeta=zeta, bad_interval=bad
    )


def _sample_matrix(seed, budget, cols):
    # row-major draws: the first rows coincide for any larger budget
    return np.random.default_rng(np.random.SeedSequence(seed)).random((budget, cols))


def _to_action(space, t):
    """Map uniforms in [0, 1) onto U, proportionally to interval measure."""
    measure = space.total_measure
    if measure <= 0:
        return np.full_like(t, space.lo)
    pos = t * measure
    out = np.empty_like(pos)
    offset = 0.0
    remaining = np.ones(pos.shape, bool)
    for lo, hi in space.intervals:
        width = hi - lo
        take = remaining & (pos <= offset + width)
        out[take] = lo + (pos[take] - offset)
        remaining &= ~take
        offset += width
    out[remaining] = space.hi
    return out


def estimate_theta(
    problem: ControlProblem,
    x_lo: float,
    x_hi: float,
    budget: int = 4096,
    seed: int = 0,
) -> float:
    """Sampled Lipschitz-in-u constant of reward plus drift.

    Max over sampled (x, u1 != u2) of
    (|r(x,u1) - r(x,u2)| + |b(x,u1) - b(x,u2)|) / |u1 - u2|.
    This is a lower estimate of the true constant; compare against the
    model's analytic ceiling when one is declared.
    """
    if budget < 1000:
        raise ValueError("sampling budget must be at least 1000")
    m = _sample_matrix(seed, budget, 3)
    xs = x_lo + (x_hi - x_lo) * m[:, 0]
    u1 = _to_action(problem.action_space, m[:, 1])
    u2 = _to_action(problem.action_space, m[:, 2])
    du = np.abs(u1 - u2)
    keep = du > 1e-12
    if not keep.any():
        return 0.0
    xs, u1, u2, du = xs[keep], u1[keep], u2[keep], du[keep]
    num = np.abs(
        np.asarray(problem.reward(xs, u1), float) - np.asarray(problem.reward(xs, u2), float)
    ) + np.abs(
        np.asarray(problem.drift(xs, u1), float) - np.asarray(problem.drift(xs, u2), float)
    )
    return float(np.max(num / du))


def check_ellipticity(problem: ControlProblem, x: np.ndarray):
    """Minimum of vol(x)**2 over the grid against the declared floor eta0."""
    x = np.asarray(x, float)
    if x.size == 0:
        raise ValueError("empty grid")
    sig2 = np.broadcast_to(np.asarray(problem.vol(x), float), x.shape) ** 2
    min_sq = float(sig2.min())
    ok = bool(min_sq >= problem.eta0 - 1e-12 * max(1.0, problem.eta0))
    return ok, min_sq


def estimate_lambda_k(
    problem: ControlProblem,
    k: int,
    x_lo: float,
    x_hi: float,
    budget: int = 4096,
    seed: int = 0,
) -> dict:
    """Sampled sup of |d^j/dx^j| of drift, reward, vol for j <= k (k <= 2).

    Derivatives use centered differences with step 1e-3.  Values above 1e6
    are flagged as a likely unbounded coefficient.
    """
    if k > 2 or k < 0:
        raise ValueError("only k <= 2 is supported")
    if budget < 1000:
        raise ValueError("sampling budget must be at least 1000")
    m = _sample_matrix(seed, budget, 2)
    xs = x_lo + (x_hi - x_lo) * m[:, 0]
    us = _to_action(problem.action_space, m[:, 1])
    h = _FD_STEP

    def fields(x):
        return (
            np.asarray(problem.drift(x, us), float),
            np.asarray(problem.reward(x, us), float),
            np.broadcast_to(np.asarray(problem.vol(x), float), x.shape),
        )

    f0 = fields(xs)
    fp = fields(xs + h)
    fm = fields(xs - h)
    names = ("drift", "reward", "vol")
    out = {}
    sup0 = {n: float(np.abs(a).max()) for n, a in zip(names, f0)}
    out["0"] = sup0
    if k >= 1:
        out["1"] = {
            n: float(np.abs((p - q) / (2 * h)).max())
            for n, p, q in zip(names, fp, fm)
        }
    if k >= 2:
        out["2"] = {
            n: float(np.abs((p - 2 * a + q) / h**2).max())
            for n, p, a, q in zip(names, fp, f0, fm)
        }
    return out


def validate_problem(
    problem: ControlProblem,
    x_lo: float,
    x_hi: float,
    budget: int = 4096,
    seed: int = 0,
    k: int = 2,
) -> AssumptionReport:
    """Run every check over the working domain and aggregate a verdict."""
    space_check = check_action_space(problem.action_space)
    theta = (
        estimate_theta(problem, x_lo, x_hi, budget, seed)
        if space_check.leb_ok
        else 0.0
    )
    grid = np.linspace(x_lo, x_hi, 513)
    ell_ok, min_sq = check_ellipticity(problem, grid)
    lam_k = estimate_lambda_k(problem, k, x_lo, x_hi, budget, seed)
    finite = all(v < _BLOWUP for level in lam_k.values() for v in level.values())
    passed = bool(space_check.leb_ok and space_check.cone_ok and ell_ok and finite)
    return AssumptionReport(
        leb_ok=space_check.leb_ok,
        total_measure=problem.action_space.total_measure,
        cone_ok=space_check.cone_ok,
        zeta=space_check.zeta,
        bad_interval=space_check.bad_interval,
        theta_sampled=theta,
        theta_ceiling=problem.theta_ceiling,
        ellipticity_ok=ell_ok,
        min_vol_sq=min_sq,
        eta0=problem.eta0,
        lambda_k=lam_k,
        lambda_k_finite=finite,
        budget=budget,
        passed=passed,
    )
