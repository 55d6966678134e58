"""The policy improvement loop with per-iteration convergence diagnostics.

Each pass takes the central-difference gradient of the previous value, forms
the Gibbs policy from it, evaluates that policy by the linear elliptic solve,
and records: the sup-norm step, the minimum pointwise increment (monotone
improvement margin), the interior residual of the exploratory dynamic
programming equation, and a C2-norm proxy (sum of interior sup norms of v,
v', v'').  Iteration stops when the sup-norm step falls below a relative
tolerance or the iteration budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Union

import numpy as np

from .evaluate import (
    NEUMANN0,
    BoundaryCondition,
    ValueGrid,
    derivative_fields,
    evaluate_snapshot,
    hjb_residual,
    interior_mask,
    uniform_value_bound,
)
from .gibbs import PolicySnapshot, gibbs_snapshot
from .model import ControlProblem
from .quadrature import ActionQuadrature

__all__ = [
    "PiaConfig",
    "IterationRecord",
    "PiaHistory",
    "run_pia",
    "gradient",
    "check_monotone",
    "c2_norm_track",
    "C2Track",
]


@dataclass(frozen=True)
class PiaConfig:
    """Loop controls; stop_tol is relative to max(1, ||v||_inf)."""

    max_iters: int = 60
    stop_tol: float = 1e-8
    residual_tol: float = 5e-3
    v0: Union[float, np.ndarray] = 0.0
    scheme: str = "upwind"
    buffer_frac: float = 0.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")


@dataclass(frozen=True)
class IterationRecord:
    n: int
    sup_delta: float
    mono_margin: float
    residual_sup: float
    c2_proxy: float
    v_sup: float = 0.0


@dataclass
class PiaHistory:
    """Iteration records plus the final value grid and policy snapshot."""

    records: List[IterationRecord] = field(default_factory=list)
    grid: ValueGrid = None
    snapshot: PolicySnapshot = None
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)


def gradient(vgrid: ValueGrid) -> np.ndarray:
    """First-derivative field of the value: central differences on the
    interior, second-order one-sided stencils at the two ends."""
    dv, _ = derivative_fields(vgrid.x, vgrid.v)
    return dv


def run_pia(
    problem: ControlProblem,
    quad: ActionQuadrature,
    x: np.ndarray,
    cfg: PiaConfig = None,
    bc: BoundaryCondition = NEUMANN0,
) -> PiaHistory:
    """Iterate Gibbs improvement and policy evaluation from cfg.v0.

    Aborts with RuntimeError if an iterate exceeds ten times the uniform
    value bound, which cannot happen for a faithful discretization of a
    bounded-reward problem and therefore flags a defect in the setup.
    """
    cfg = cfg or PiaConfig()
    x = np.asarray(x, float)
    if x.size < 5:
        raise ValueError("grid needs at least 5 nodes")
    if np.isscalar(cfg.v0) or np.ndim(cfg.v0) == 0:
        v_prev = np.full(x.shape, float(cfg.v0))
    else:
        v_prev = np.asarray(cfg.v0, float).copy()
        if v_prev.shape != x.shape:
            raise ValueError("custom v0 must match the grid size")

    bound = uniform_value_bound(problem, quad, x)
    mask = interior_mask(x.size, cfg.buffer_frac)
    history = PiaHistory()
    for n in range(1, cfg.max_iters + 1):
        dv_prev, _ = derivative_fields(x, v_prev)
        snapshot = gibbs_snapshot(problem, quad, x, dv_prev)
        vgrid = evaluate_snapshot(problem, quad, x, snapshot, bc, cfg.scheme)
        v = vgrid.v
        v_sup = float(np.abs(v).max())
        if v_sup > 10.0 * bound:
            raise RuntimeError(
                f"iterate {n} escaped the uniform value bound "
                f"(||v||={v_sup:.3g} > 10 x {bound:.3g}); the discretization "
                "is defective for this problem"
            )
        delta = v - v_prev
        residual = hjb_residual(problem, quad, vgrid)
        record = IterationRecord(
            n=n,
            sup_delta=float(np.abs(delta).max()),
            mono_margin=float(delta.min()),
            residual_sup=float(np.abs(residual[mask]).max()),
            c2_proxy=float(
                np.abs(v[mask]).max()
                + np.abs(vgrid.dv[mask]).max()
                + np.abs(vgrid.d2v[mask]).max()
            ),
            v_sup=v_sup,
        )
        history.records.append(record)
        history.grid = vgrid
        history.snapshot = snapshot
        if record.sup_delta <= cfg.stop_tol * max(1.0, v_sup):
            history.converged = True
            break
        v_prev = v
    return history


def check_monotone(history: PiaHistory, tol: float) -> List[int]:
    """Iterations n >= 2 whose minimum pointwise increment fell below -tol.

    An empty list is a pass.  The first iteration is exempt: v1 is compared
    against the arbitrary starting field, not against an evaluated policy.
    """
    if history.iterations < 2:
        raise ValueError("need at least 2 iterations to check improvement")
    return [r.n for r in history.records if r.n >= 2 and r.mono_margin < -tol]


@dataclass(frozen=True)
class C2Track:
    series: np.ndarray
    running_max: np.ndarray
    flagged: bool


def c2_norm_track(history: PiaHistory) -> C2Track:
    """C2-proxy series, its running max, and a flag for late growth.

    The flag trips when the running max still grows by more than 1% over the
    final quarter of the recorded iterations, i.e. the proxy has not settled.
    """
    if history.iterations == 0:
        raise ValueError("empty history")
    series = np.array([r.c2_proxy for r in history.records])
    running = np.maximum.accumulate(series)
    k0 = (3 * series.size) // 4
    flagged = bool(running[-1] > 1.01 * running[min(k0, series.size - 1)])
    return C2Track(series=series, running_max=running, flagged=flagged)
