"""Entropy-regularized policy improvement for 1-D controlled diffusions.

The package synthesizes Gibbs-form relaxed policies from value gradients,
evaluates each policy by a linear discounted elliptic solve, iterates to the
fixed point of the exploratory dynamic programming equation, and
cross-validates values with an independent Monte Carlo rollout engine.
"""

__version__ = "0.1.0"

from .evaluate import (
    NEUMANN0,
    BoundaryCondition,
    TridiagonalSystem,
    ValueGrid,
    assemble,
    dirichlet,
    evaluate_policy,
    evaluate_snapshot,
    hjb_residual,
    interior_mask,
    solve_tridiagonal,
    uniform_value_bound,
)
from .gibbs import (
    HattedCoeffs,
    PolicySnapshot,
    entropy_bound_kappa,
    gamma_sup_bound,
    gibbs_snapshot,
    hatted,
    soft_hamiltonian,
    uniform_snapshot,
)
from .model import (
    ActionSpace,
    ControlProblem,
    GrowthParams,
    MertonParams,
    default_growth,
    default_merton,
    make_growth,
    make_merton,
    make_quadratic_test,
)
from .pia import (
    C2Track,
    IterationRecord,
    PiaConfig,
    PiaHistory,
    c2_norm_track,
    check_monotone,
    gradient,
    run_pia,
)
from .quadrature import (
    ActionQuadrature,
    build_quadrature,
    integrate,
    log_integral_exp,
)
from .rollout import McConfig, McEstimate, required_horizon, simulate_value
from .validate import (
    AssumptionReport,
    check_action_space,
    check_ellipticity,
    estimate_lambda_k,
    estimate_theta,
    validate_problem,
)
