"""Optimal (s, S) replenishment for the canonical inventory problem.

Quadratic holding/backlog cost f(x) = x^2, unit ordering cost C = 10, fixed
cost K = 10, discount q = 0.03. The solver returns the reorder point s*, the
order-up-to level S*, and the value function; the fit diagnostics show
continuous fit (pure jump demand) or smooth fit (with Brownian noise) at s*.

    python demos/optimal_policy.py
"""

import numpy as np

from levy_inventory.cost_model import CostSpec
from levy_inventory.levy_models import BetaFamily
from levy_inventory.policy_solver import expected_cost_ss, solve_ss, value_function
from levy_inventory.scale_fns import build_kernel

spec = CostSpec(C=10.0, K=10.0, q=0.03)

for sigma in (0.0, 0.2):
    model = BetaFamily(delta_hat=0.1, sigma=sigma, alpha=3.0, beta=1.0, varpi=0.1, lam=1.5)
    sol = solve_ss(build_kernel(model, spec.q), spec)
    fit = sol.fit
    print(f"\nsigma = {sigma}")
    print(f"  s* = {sol.s_star:.8f}   a0 = {sol.a0:.8f}   S* = {sol.S_star:.8f}")
    print(f"  value gap at s* {fit.value_gap:.1e}, slope gap {fit.slope_gap:.1e}")

    # below s* the policy orders straight up to S*, so v is affine there with slope -C
    for x in (-3.0, -2.0, 0.0, 2.0):
        print(f"  v({x:+.0f}) = {value_function(sol, x):.6f}")

    # nudging either threshold costs more
    base = value_function(sol, 0.0)
    for ds, dS in ((-0.2, 0.0), (0.2, 0.0), (0.0, -0.2), (0.0, 0.2)):
        other = expected_cost_ss(sol.kernel, spec, sol.s_star + ds, sol.S_star + dS, 0.0)
        print(f"  (s*{ds:+.1f}, S*{dS:+.1f}) costs {other - base:+.5f} more at x = 0")
