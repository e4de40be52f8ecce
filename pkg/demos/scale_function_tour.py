"""Scale functions of beta-family demand.

Builds the q-scale function for the two canonical demand models (pure jump and
jump plus Brownian noise), shows how the roots interlace with the poles, and
checks the Laplace-transform identity that pins W down.

    python demos/scale_function_tour.py
"""

import numpy as np

from levy_inventory.levy_models import BetaFamily, poles
from levy_inventory.scale_fns import build_kernel, eval_kernel, laplace_check

Q = 0.03

for sigma in (0.0, 0.2):
    model = BetaFamily(delta_hat=0.1, sigma=sigma, alpha=3.0, beta=1.0, varpi=0.1, lam=1.5)
    k = build_kernel(model, Q)
    print(f"\nsigma = {sigma}:  Phi(q) = {k.phi_q:.10f},  E[X_1] = {k.mu:.6f}")

    # first roots sit strictly between consecutive poles
    xi, eta = k.roots.xis[:5], poles(model, 5)
    for j, (a, b) in enumerate(zip(xi, eta), 1):
        print(f"  xi_{j} = {a:10.6f}  <  eta_{j} = {b:4.1f}")

    # W(0) is 1/delta for bounded variation and 0 otherwise
    x = np.array([0.0, 0.01, 0.1, 1.0, 5.0])
    print("  x      W(x)          Z(x)")
    for xv, w, z in zip(x, eval_kernel(k, "W", x), eval_kernel(k, "Z", x)):
        print(f"  {xv:<5} {w:<13.6g} {z:.6g}")

    s_vals = k.phi_q + np.linspace(0.5, 5.0, 4)
    worst = max(abs(laplace_check(k, s) - 1.0) for s in s_vals)
    print(f"  Laplace identity: max |(psi(s) - q) * LW(s) - 1| = {worst:.1e}")
