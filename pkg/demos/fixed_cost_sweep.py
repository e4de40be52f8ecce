"""How the policy reacts to the cost parameters.

As the fixed cost K shrinks the (s, S) band collapses onto a0 and the value
function approaches that of the reflecting barrier at a0. Raising the unit
cost C raises the value function everywhere. Writes sweep_K.csv and sweep_C.csv
in the working directory for plotting.

    python demos/fixed_cost_sweep.py
"""

import csv

import numpy as np

from levy_inventory.cost_model import CostSpec
from levy_inventory.levy_models import BetaFamily
from levy_inventory.policy_solver import barrier_value, solve_barrier, solve_ss, value_function
from levy_inventory.scale_fns import build_kernel

Q = 0.03
model = BetaFamily(delta_hat=0.1, sigma=0.2, alpha=3.0, beta=1.0, varpi=0.1, lam=1.5)
k = build_kernel(model, Q)
grid = np.linspace(-5.0, 5.0, 201)

bspec = CostSpec(C=10.0, K=0.0, q=Q)
bar = solve_barrier(k, bspec)
vb = barrier_value(k, bspec, grid, bar.a0)
print(f"barrier level a0 = {bar.a0:.6f}")
print("     K        s*         S*     max|v - v_barrier|")
rows = []
for K in (10.0, 5.0, 1.0, 0.1, 0.01):
    sol = solve_ss(k, CostSpec(C=10.0, K=K, q=Q))
    v = value_function(sol, grid)
    print(f"{K:6g}  {sol.s_star:9.5f}  {sol.S_star:9.5f}   {np.max(np.abs(v - vb)):.4g}")
    rows += [(K, x, y) for x, y in zip(grid, v)]
rows += [(0.0, x, y) for x, y in zip(grid, vb)]
with open("sweep_K.csv", "w", newline="") as fh:
    csv.writer(fh).writerows([("K", "x", "v"), *rows])

print("\n     C        s*         S*      v(0)")
rows = []
for C in (0.0, 1.0, 5.0, 10.0, 20.0, 30.0):
    sol = solve_ss(k, CostSpec(C=C, K=10.0, q=Q))
    v = value_function(sol, grid)
    print(f"{C:6g}  {sol.s_star:9.5f}  {sol.S_star:9.5f}  {float(value_function(sol, 0.0)):9.4f}")
    rows += [(C, x, y) for x, y in zip(grid, v)]
with open("sweep_C.csv", "w", newline="") as fh:
    csv.writer(fh).writerows([("C", "x", "v"), *rows])
