"""Fixed quadrature rules over an action space and stable log-integration.

Node layout is frozen per rule so policy densities evaluated at different
state points share the same action nodes, which keeps the policy evaluation
fully vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ActionSpace

__all__ = ["ActionQuadrature", "build_quadrature", "integrate", "log_integral_exp"]


@dataclass(frozen=True)
class ActionQuadrature:
    """Nodes u_j inside U and positive weights summing to Leb(U)."""

    nodes: np.ndarray
    weights: np.ndarray
    rule: str
    order: int
    panels: int
    total_measure: float

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


def build_quadrature(
    space: ActionSpace,
    rule: str = "gauss-legendre",
    order: int = 16,
    panels: int = 4,
) -> ActionQuadrature:
    """Composite rule with ``panels`` panels per interval of U.

    Gauss-Legendre of order m integrates polynomials up to degree 2m - 1
    exactly on each panel; the composite trapezoid rule is available for
    refinement-behavior checks.
    """
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    if panels < 1:
        raise ValueError("panel count must be at least 1")
    if not space.intervals:
        raise ValueError("empty interval list")

    nodes = []
    weights = []
    if rule == "gauss-legendre":
        xi, wi = np.polynomial.legendre.leggauss(order)
        for lo, hi in space.intervals:
            edges = np.linspace(lo, hi, panels + 1)
            for a, b in zip(edges[:-1], edges[1:]):
                half = 0.5 * (b - a)
                nodes.append(half * xi + 0.5 * (a + b))
                weights.append(half * wi)
    elif rule == "trapezoid":
        for lo, hi in space.intervals:
            if hi == lo:
                nodes.append(np.array([lo]))
                weights.append(np.array([0.0]))
                continue
            pts = np.linspace(lo, hi, panels + 1)
            h = (hi - lo) / panels
            w = np.full(panels + 1, h)
            w[0] = w[-1] = 0.5 * h
            nodes.append(pts)
            weights.append(w)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")

    return ActionQuadrature(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        rule=rule,
        order=order,
        panels=panels,
        total_measure=space.total_measure,
    )


def _node_values(quad, f):
    vals = np.asarray(f(quad.nodes) if callable(f) else f, float)
    if vals.shape[-1] != quad.nodes.shape[0]:
        raise ValueError(
            f"integrand has {vals.shape[-1]} values for {quad.nodes.shape[0]} nodes"
        )
    return vals


def integrate(quad: ActionQuadrature, f) -> float:
    """Weighted node sum of f over U; f is a callable or an array of node values."""
    vals = _node_values(quad, f)
    if not np.all(np.isfinite(vals)):
        bad = int(np.count_nonzero(~np.isfinite(vals)))
        raise ValueError(f"integrand is not finite at {bad} node(s)")
    out = vals @ quad.weights
    return float(out) if np.ndim(out) == 0 else out


def log_integral_exp(quad: ActionQuadrature, g):
    """ln of the integral of exp(g(u)) du over U, via a weighted log-sum-exp.

    Computed as M + ln(sum_j w_j exp(g_j - M)) with M = max_j g_j, so it never
    overflows for any finite g.  ``g`` is a callable or an array whose last
    axis runs over the nodes; rows may contain -inf (zero mass) but a row of
    all -inf has empty support and is rejected, as are NaN and +inf.
    """
    vals = _node_values(quad, g)
    if np.isnan(vals).any():
        raise ValueError("log-integrand contains NaN")
    if np.isposinf(vals).any():
        raise ValueError("log-integrand contains +inf")
    m = np.max(vals, axis=-1, keepdims=True)
    if np.isneginf(m).any():
        raise ValueError("empty effective support: all node values are -inf")
    out = m[..., 0] + np.log(np.exp(vals - m) @ quad.weights)
    return float(out) if np.ndim(out) == 0 else out
