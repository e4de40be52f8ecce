"""Cross-check the analytic answers by simulation.

Simulates the demand process (small jumps replaced by Brownian noise) under
the optimal (s, S) policy and under the K = 0 barrier, and compares the
discounted costs and two exit functionals with their scale-function values.
Uses 2000 paths by default to finish in well under a minute; pass a path
count to change it.

    python demos/monte_carlo_check.py [n_paths]
"""

import sys

from levy_inventory.checks import monte_carlo_rows
from levy_inventory.cost_model import CostSpec
from levy_inventory.levy_models import BetaFamily
from levy_inventory.mc_simulator import SimConfig
from levy_inventory.policy_solver import solve_ss
from levy_inventory.scale_fns import build_kernel

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
spec = CostSpec(C=10.0, K=10.0, q=0.03)
model = BetaFamily(delta_hat=0.1, sigma=0.2, alpha=3.0, beta=1.0, varpi=0.1, lam=1.5)
sol = solve_ss(build_kernel(model, spec.q), spec)

rows = monte_carlo_rows(sol, SimConfig(n_paths=n_paths, seed=1), auto_horizon=True)
print(f"{'quantity':<16}{'MC mean':>12}{'std err':>10}{'analytic':>12}{'z':>7}")
for name, mean, se, exact, z, _, _ in rows:
    print(f"{name:<16}{mean:12.5f}{se:10.5f}{exact:12.5f}{z:7.2f}")
