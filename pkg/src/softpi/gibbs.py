"""Gibbs relaxed policies, their averaged coefficients, and growth bounds.

For a state grid x_i with gradient field y_i, the policy density is

    Gamma(x_i, y_i, u) = exp(g_ij) / Z_i,
    g_ij = (b(x_i, u_j) * y_i + r(x_i, u_j)) / lam,
    ln Z_i = ln integral over U of exp(g) du,

the unique maximizer of the entropy-regularized action integrand.  All
manipulations stay in log space; densities are materialized only when
integrating against them, so small entropy weights do not overflow.

The averaged ("hatted") coefficients per node are b_hat = E[b], r_hat = E[r],
the entropy term H_hat = lam * E[ln Gamma], and the soft Hamiltonian
soft = lam * ln Z, with expectations under Gamma.  They satisfy the identity
H_hat = b_hat * y + r_hat - soft.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ControlProblem
from .quadrature import ActionQuadrature, log_integral_exp

__all__ = [
    "PolicySnapshot",
    "HattedCoeffs",
    "gibbs_snapshot",
    "uniform_snapshot",
    "hatted",
    "soft_hamiltonian",
    "gamma_sup_bound",
    "entropy_bound_kappa",
]


@dataclass(frozen=True)
class PolicySnapshot:
    """Per-node log-weights and log-partition of a relaxed policy.

    ``log_weights`` has shape (n_nodes, n_quad) and already includes the
    1/lam factor; ``log_z`` normalizes each row.  ``y`` records the gradient
    field the snapshot was built from (zero for the uniform policy).
    """

    x: np.ndarray
    y: np.ndarray
    log_weights: np.ndarray
    log_z: np.ndarray

    def density(self) -> np.ndarray:
        """Gamma values on the quadrature nodes, shape (n_nodes, n_quad)."""
        return np.exp(self.log_weights - self.log_z[:, None])


@dataclass(frozen=True)
class HattedCoeffs:
    """Gamma-averaged drift/reward, entropy term, and soft Hamiltonian."""

    b_hat: np.ndarray
    r_hat: np.ndarray
    h_hat: np.ndarray
    soft: np.ndarray


def _coef_matrices(problem, x, nodes):
    """Drift and reward on the (grid x nodes) product, broadcast to 2-D."""
    xs = np.asarray(x, float).reshape(-1, 1)
    us = np.asarray(nodes, float).reshape(1, -1)
    shape = (xs.shape[0], us.shape[1])
    b = np.broadcast_to(np.asarray(problem.drift(xs, us), float), shape)
    r = np.broadcast_to(np.asarray(problem.reward(xs, us), float), shape)
    return b, r


def gibbs_snapshot(
    problem: ControlProblem,
    quad: ActionQuadrature,
    x: np.ndarray,
    y: np.ndarray,
) -> PolicySnapshot:
    """Build the Gibbs policy on the grid from a gradient field y."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same shape")
    if not np.all(np.isfinite(y)):
        i = int(np.flatnonzero(~np.isfinite(y))[0])
        raise ValueError(f"gradient field not finite at grid node {i} (x={x[i]:g})")
    b, r = _coef_matrices(problem, x, quad.nodes)
    for name, mat in (("drift", b), ("reward", r)):
        if not np.all(np.isfinite(mat)):
            i = int(np.argwhere(~np.isfinite(mat))[0][0])
            raise ValueError(f"{name} not finite at grid node {i} (x={x[i]:g})")
    g = (b * y[:, None] + r) / problem.lam
    log_z = np.asarray(log_integral_exp(quad, g), float)
    return PolicySnapshot(x=x, y=y, log_weights=g, log_z=log_z)


def uniform_snapshot(
    problem: ControlProblem, quad: ActionQuadrature, x: np.ndarray
) -> PolicySnapshot:
    """The uniform relaxed policy 1/Leb(U) at every grid node."""
    x = np.asarray(x, float)
    n = x.shape[0]
    g = np.zeros((n, quad.nodes.shape[0]))
    log_z = np.full(n, math.log(quad.total_measure))
    return PolicySnapshot(x=x, y=np.zeros(n), log_weights=g, log_z=log_z)


def hatted(
    problem: ControlProblem, quad: ActionQuadrature, snapshot: PolicySnapshot
) -> HattedCoeffs:
    """Average drift, reward, and log-density under the snapshot policy."""
    b, r = _coef_matrices(problem, snapshot.x, quad.nodes)
    ln_gamma = snapshot.log_weights - snapshot.log_z[:, None]
    gamma = np.exp(ln_gamma)
    w = quad.weights
    return HattedCoeffs(
        b_hat=(b * gamma) @ w,
        r_hat=(r * gamma) @ w,
        h_hat=problem.lam * ((ln_gamma * gamma) @ w),
        soft=problem.lam * snapshot.log_z,
    )


def soft_hamiltonian(
    problem: ControlProblem, quad: ActionQuadrature, x: float, y: float
) -> float:
    """Entropy-regularized action supremum lam * ln integral exp((b*y + r)/lam) du.

    This is the value the Gibbs policy attains in the relaxed maximization;
    every other density scores lower by lam times its KL divergence from the
    Gibbs density.
    """
    u = quad.nodes
    b = np.broadcast_to(np.asarray(problem.drift(x, u), float), u.shape)
    r = np.broadcast_to(np.asarray(problem.reward(x, u), float), u.shape)
    g = (b * y + r) / problem.lam
    return problem.lam * log_integral_exp(quad, g)


def _resolve_theta_zeta(problem, theta, zeta):
    if theta is None:
        theta = problem.theta_ceiling
    if theta is None:
        raise ValueError(
            "no Lipschitz-in-u constant available: pass theta explicitly or use "
            "validate.estimate_theta on a problem without an analytic ceiling"
        )
    if zeta is None:
        zeta = problem.action_space.min_interval_length
    if not zeta > 0:
        raise ValueError("action space has a zero-length interval; zeta must be positive")
    return float(theta), float(zeta)


def gamma_sup_bound(
    problem: ControlProblem,
    y_abs: float,
    theta: Optional[float] = None,
    zeta: Optional[float] = None,
) -> float:
    """Upper bound for sup over (x, u) of Gamma(x, y, u) when |y| <= y_abs.

    Returns max(e/zeta, (theta/lam) * (1 + y_abs) / (1 - 1/e)), where theta
    bounds the Lipschitz-in-u constant of reward plus drift and zeta is the
    minimal interval length of U.  Valid for scalar actions with every point
    of U having a one-sided subinterval of length zeta.
    """
    theta, zeta = _resolve_theta_zeta(problem, theta, zeta)
    one_minus = 1.0 - math.exp(-1.0)
    return max(math.e / zeta, (theta / problem.lam) * (1.0 + y_abs) / one_minus)


def entropy_bound_kappa(
    problem: ControlProblem,
    theta: Optional[float] = None,
    zeta: Optional[float] = None,
):
    """Constants (kappa, slope) with |H_hat(x, y)| <= kappa + slope * ln(1 + |y|).

    kappa = lam * (|ln Leb(U)| + |ln C|) for C = max(e/zeta, (theta/lam)/(1 - 1/e)),
    and slope = lam.  The lower side is the plain entropy ceiling: negentropy
    of any density on U is at least -ln Leb(U).
    """
    theta, zeta = _resolve_theta_zeta(problem, theta, zeta)
    one_minus = 1.0 - math.exp(-1.0)
    c = max(math.e / zeta, (theta / problem.lam) / one_minus)
    kappa = problem.lam * (
        abs(math.log(problem.action_space.total_measure)) + abs(math.log(c))
    )
    return kappa, problem.lam
