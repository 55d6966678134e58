"""Anatomy of one improvement step: the soft action maximization.

At a single state, the relaxed maximization over densities has a closed-form
winner: the Gibbs density with log-weights (b(x,u) y + r(x,u)) / lam, whose
attained value is the log-partition times lam.  Every other density loses
exactly lam times its KL divergence from the winner.  The script verifies the
variational gap numerically and shows the winner against two contenders.
"""

import numpy as np

from softpi import (
    build_quadrature,
    default_merton,
    gibbs_snapshot,
    soft_hamiltonian,
    uniform_snapshot,
)
from softpi.quadrature import integrate

problem = default_merton()
quad = build_quadrature(problem.action_space)
x0, y0 = 0.0, 2.0

soft = soft_hamiltonian(problem, quad, x0, y0)
print(f"soft Hamiltonian at x={x0}, y={y0}: {soft:.6f}\n")

u = quad.nodes
b = np.asarray(problem.drift(x0, u), float)
r = np.asarray(problem.reward(x0, u), float)


def plug_in(density):
    return integrate(quad, (b * y0 + r - problem.lam * np.log(density)) * density)


gibbs = gibbs_snapshot(problem, quad, np.array([x0]), np.array([y0])).density()[0]
uniform = uniform_snapshot(problem, quad, np.array([x0])).density()[0]
rng = np.random.default_rng(0)
ragged = rng.uniform(0.2, 1.0, u.shape)
ragged /= integrate(quad, ragged)

print(f"{'density':>10} {'plug-in value':>15} {'gap to soft':>13}")
for name, dens in (("gibbs", gibbs), ("uniform", uniform), ("ragged", ragged)):
    val = plug_in(dens)
    print(f"{name:>10} {val:>15.6f} {soft - val:>13.2e}")

kl = integrate(quad, ragged * np.log(ragged / gibbs))
print(f"\nragged gap equals lam * KL(ragged || gibbs) = {problem.lam * kl:.2e}")
