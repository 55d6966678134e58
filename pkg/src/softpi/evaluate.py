"""Policy evaluation: the linear discounted elliptic solve on a truncated grid.

The value of a fixed relaxed policy solves

    -rho * v + b_hat(x) * v' + sigma(x)**2 / 2 * v'' + (r_hat - H_hat)(x) = 0

on the working interval.  The problem itself lives on the whole line; the
grid truncates it and zero-derivative (Neumann) boundary conditions stand in
for the flattening of the bounded value function at infinity.  Diagnostics
that take sup norms should exclude a boundary buffer (``interior_mask``) so
truncation artifacts do not pollute them.

Drift terms are discretized with first-order upwinding by default, which
makes the assembled matrix strictly diagonally dominant with nonpositive
off-diagonal entries (an M-matrix), so the Thomas solve is stable and the
discrete maximum principle holds.  A second-order central option exists for
refinement studies; it requires the cell Peclet condition |b_hat| * h <= sigma**2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gibbs import PolicySnapshot, _coef_matrices, gibbs_snapshot, hatted
from .model import ControlProblem
from .quadrature import ActionQuadrature

__all__ = [
    "BoundaryCondition",
    "NEUMANN0",
    "dirichlet",
    "ValueGrid",
    "TridiagonalSystem",
    "assemble",
    "solve_tridiagonal",
    "evaluate_policy",
    "evaluate_snapshot",
    "hjb_residual",
    "derivative_fields",
    "interior_mask",
    "uniform_value_bound",
]


@dataclass(frozen=True)
class BoundaryCondition:
    """Either zero-derivative ends ("neumann0") or pinned values ("dirichlet")."""

    kind: str
    values: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("neumann0", "dirichlet"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")


NEUMANN0 = BoundaryCondition("neumann0")


def dirichlet(left: float, right: float) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", (float(left), float(right)))


@dataclass
class ValueGrid:
    """Uniform grid with the value field and its derivative fields."""

    x: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    d2v: np.ndarray
    bc: BoundaryCondition

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def n(self) -> int:
        return int(self.x.shape[0])


@dataclass
class TridiagonalSystem:
    """A v = rhs with sub/super diagonals of length n - 1."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray


def _grid_spacing(x):
    x = np.asarray(x, float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("grid must be a 1-D array with at least 3 nodes")
    h = float(x[1] - x[0])
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    steps = np.diff(x)
    if np.max(np.abs(steps - h)) > 1e-9 * h:
        raise ValueError("grid must be uniform")
    return h


def interior_mask(n: int, frac: float = 0.1) -> np.ndarray:
    """Boolean mask excluding a buffer of round(frac * n) nodes on each side."""
    buf = max(1, int(round(frac * n)))
    mask = np.zeros(n, bool)
    mask[buf : n - buf] = True
    return mask


def assemble(
    problem: ControlProblem,
    x: np.ndarray,
    b_hat: np.ndarray,
    source: np.ndarray,
    bc: BoundaryCondition = NEUMANN0,
    scheme: str = "upwind",
) -> TridiagonalSystem:
    """Discretize rho*v - b_hat*v' - sigma^2/2 * v'' = source on the grid.

    Interior row i states (rho + sigma_i^2/h^2 + |b_hat_i|/h) v_i minus
    positive couplings to the neighbors equals source_i, i.e. the negative of
    the discounted generator applied to v.  Upwinding picks the forward
    difference where b_hat >= 0 and the backward difference otherwise, so the
    diagonal dominates the off-diagonal row sum by exactly rho.
    """
    x = np.asarray(x, float)
    h = _grid_spacing(x)
    n = x.size
    b_hat = np.asarray(b_hat, float)
    source = np.asarray(source, float)
    if b_hat.shape != (n,) or source.shape != (n,):
        raise ValueError("b_hat and source must match the grid size")
    sig2 = np.broadcast_to(np.asarray(problem.vol(x), float), (n,)) ** 2
    for name, field in (("b_hat", b_hat), ("source", source), ("vol", sig2)):
        if not np.all(np.isfinite(field)):
            raise ValueError(f"{name} contains non-finite entries")

    diff = 0.5 * sig2 / h**2
    if scheme == "upwind":
        bp = np.maximum(b_hat, 0.0)
        bm = np.maximum(-b_hat, 0.0)
        lower = diff + bm / h
        upper = diff + bp / h
    elif scheme == "central":
        lower = diff - b_hat / (2.0 * h)
        upper = diff + b_hat / (2.0 * h)
        if (lower[1:-1] < 0).any() or (upper[1:-1] < 0).any():
            raise ValueError(
                "central drift differences violate the cell Peclet condition "
                "|b_hat| * h <= sigma**2; use scheme='upwind' or refine the grid"
            )
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    center = problem.rho + lower + upper

    sub = np.empty(n - 1)
    sup = np.empty(n - 1)
    diag = np.empty(n)
    rhs = np.empty(n)
    diag[1:-1] = center[1:-1]
    sub[:-1] = -lower[1:-1]
    sup[1:] = -upper[1:-1]
    rhs[1:-1] = source[1:-1]

    if bc.kind == "neumann0":
        diag[0] = 1.0
        sup[0] = -1.0
        rhs[0] = 0.0
        diag[-1] = 1.0
        sub[-1] = -1.0
        rhs[-1] = 0.0
    else:
        diag[0] = 1.0
        sup[0] = 0.0
        rhs[0] = bc.values[0]
        diag[-1] = 1.0
        sub[-1] = 0.0
        rhs[-1] = bc.values[1]
    return TridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Thomas recurrence for the assembled system."""
    diag = system.diag
    sub = system.sub
    sup = system.sup
    rhs = system.rhs
    n = diag.size
    if sub.size != n - 1 or sup.size != n - 1 or rhs.size != n:
        raise ValueError("inconsistent band sizes")
    c = np.empty(n - 1)
    d = np.empty(n)
    piv = diag[0]
    if abs(piv) < 1e-300:
        raise ValueError("singular tridiagonal system: zero pivot at row 0")
    c[0] = sup[0] / piv
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * c[i - 1]
        if abs(piv) < 1e-300:
            raise ValueError(f"singular tridiagonal system: zero pivot at row {i}")
        if i < n - 1:
            c[i] = sup[i] / piv
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv
    v = np.empty(n)
    v[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        v[i] = d[i] - c[i] * v[i + 1]
    return v


def derivative_fields(x: np.ndarray, v: np.ndarray):
    """Central first/second differences, second-order one-sided at the ends."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    h = _grid_spacing(x)
    if v.size < 5:
        raise ValueError("need at least 5 nodes for the derivative stencils")
    dv = np.empty_like(v)
    d2v = np.empty_like(v)
    dv[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    dv[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    dv[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    d2v[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    d2v[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    d2v[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    return dv, d2v


def evaluate_snapshot(
    problem: ControlProblem,
    quad: ActionQuadrature,
    x: np.ndarray,
    snapshot: PolicySnapshot,
    bc: BoundaryCondition = NEUMANN0,
    scheme: str = "upwind",
) -> ValueGrid:
    """Value of an explicit policy snapshot (e.g. the uniform policy)."""
    x = np.asarray(x, float)
    coeffs = hatted(problem, quad, snapshot)
    system = assemble(problem, x, coeffs.b_hat, coeffs.r_hat - coeffs.h_hat, bc, scheme)
    v = solve_tridiagonal(system)
    dv, d2v = derivative_fields(x, v)
    return ValueGrid(x=x, v=v, dv=dv, d2v=d2v, bc=bc)


def evaluate_policy(
    problem: ControlProblem,
    quad: ActionQuadrature,
    x: np.ndarray,
    y: np.ndarray,
    bc: BoundaryCondition = NEUMANN0,
    scheme: str = "upwind",
) -> ValueGrid:
    """Value of the Gibbs policy built from the gradient field y."""
    snapshot = gibbs_snapshot(problem, quad, np.asarray(x, float), np.asarray(y, float))
    return evaluate_snapshot(problem, quad, x, snapshot, bc, scheme)


def hjb_residual(
    problem: ControlProblem, quad: ActionQuadrature, vgrid: ValueGrid
) -> np.ndarray:
    """Pointwise residual -rho*v + sigma^2/2 * v'' + soft(x, v') on the grid.

    Returned for every node; sup norms should be taken over ``interior_mask``
    because the end stencils and the boundary surrogate contaminate the buffer.
    """
    snap = gibbs_snapshot(problem, quad, vgrid.x, vgrid.dv)
    soft = problem.lam * snap.log_z
    sig2 = np.broadcast_to(np.asarray(problem.vol(vgrid.x), float), vgrid.x.shape) ** 2
    return -problem.rho * vgrid.v + 0.5 * sig2 * vgrid.d2v + soft


def uniform_value_bound(
    problem: ControlProblem, quad: ActionQuadrature, x: np.ndarray
) -> float:
    """(sup|r| + lam * |ln Leb(U)|) / rho, with sup|r| sampled on grid x nodes.

    Every admissible relaxed policy's value is bounded by this number, so any
    iterate escaping it by a wide margin signals a discretization defect.
    """
    _, r = _coef_matrices(problem, np.asarray(x, float), quad.nodes)
    lebu = problem.action_space.total_measure
    return (float(np.abs(r).max()) + problem.lam * abs(np.log(lebu))) / problem.rho
