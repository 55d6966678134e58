"""Assumption reports: what the theory needs and how the package checks it.

Four conditions back the convergence guarantees: a positive finite action
measure, a one-sided interval of fixed length around every action (scalar
cone condition), Lipschitz dependence of reward and drift on the action, and
a strictly positive volatility floor.  The validator samples them on the
working domain and prints a verdict; the last example deliberately declares
an ellipticity floor the model cannot meet.
"""

from softpi import (
    ActionSpace,
    build_quadrature,
    default_growth,
    default_merton,
    entropy_bound_kappa,
    gamma_sup_bound,
    make_quadratic_test,
    validate_problem,
)

for problem in (default_merton(), default_growth()):
    report = validate_problem(problem, -6.0, 4.0)
    print(f"== {problem.label}: passed={report.passed}")
    print(
        f"   Leb(U)={report.total_measure:.3f}, zeta={report.zeta:.3f}, "
        f"theta sampled/ceiling = {report.theta_sampled:.3f}/{report.theta_ceiling:.3f}"
    )
    print(f"   min vol^2 = {report.min_vol_sq:.4f} vs declared floor {report.eta0:.4f}")
    kappa, slope = entropy_bound_kappa(problem)
    print(
        f"   entropy growth: |H_hat(x,y)| <= {kappa:.3f} + {slope:.2f} ln(1+|y|); "
        f"density bound at |y|<=1: {gamma_sup_bound(problem, 1.0):.2f}"
    )

# a declared contract the model cannot honor: vol is 1 but eta0 says 4
broken = make_quadratic_test(
    0.0, rho=0.1, lam=0.5, space=ActionSpace(((-1.0, 1.0),)), eta0=4.0
)
report = validate_problem(broken, -2.0, 2.0)
print(f"== deliberately broken declaration: passed={report.passed}")
print(f"   min vol^2 = {report.min_vol_sq:.1f} < declared {report.eta0:.1f}")
