"""Self-checks run by the ``check`` and ``simulate`` commands."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import mc_simulator as mc
from .cost_model import CostSpec, phi_convolution, psi_transform
from .levy_models import BetaFamily, LevyModel, _psi, variation_class
from .policy_solver import (
    PolicySolution,
    barrier_value,
    g_func,
    h_func,
    k_func,
    solve,
    solve_barrier,
    value_function,
)
from .scale_fns import (
    ScaleKernel,
    build_kernel,
    eval_kernel,
    laplace_check,
    overshoot_expectation,
    resolvent_cost,
    ruin_lt,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _guard(name, fn) -> CheckResult:
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, bool(ok), detail)


def laplace_identity(k: ScaleKernel, tol: float = 1e-4):
    s_vals = k.phi_q + np.linspace(0.5, 5.0, 10)
    err = max(abs(laplace_check(k, s) - 1.0) for s in s_vals)
    return err < tol, f"max |check - 1| = {err:.2e}"


def boundary_values(k: ScaleKernel):
    var = variation_class(k.model)
    w0 = eval_kernel(k, "W", 0.0)
    if var.bounded:
        err = abs(w0 - 1.0 / var.delta) * var.delta
        return err < 1e-3, f"W(0) = {w0:.8g}, 1/delta = {1.0 / var.delta:.8g}"
    ok = abs(w0) < 1e-8
    detail = f"W(0) = {w0:.2e}"
    if k.model.sigma > 0:
        slope = (eval_kernel(k, "W", 1e-6) - w0) / 1e-6
        rel = abs(slope * k.model.sigma**2 / 2.0 - 1.0)
        ok = ok and rel < 0.01
        detail += f", W'(0+) = {slope:.6g} vs 2/sigma^2 = {2.0 / k.model.sigma**2:.6g}"
    return ok, detail


def root_structure(k: ScaleKernel, count: int = 50):
    rs = k.roots
    n = min(count, rs.truncation_count)
    xi, eta = rs.xis[:n], rs.etas[:n]
    inter = bool(np.all(xi < eta) and np.all(xi[1:] > eta[:-1]) and xi[0] > 0)
    res = float(np.max(np.abs(_psi(k.model, -xi) - k.q)))
    return inter and res < 1e-10, f"{n} roots, interlacing {'ok' if inter else 'broken'}, max residual {res:.1e}"


def solver_residuals(sol: PolicySolution):
    K = sol.spec.K
    if sol.kind == "barrier":
        return abs(sol.g_at_opt) < 1e-10, f"a0 = {sol.a0:.10g}, Psi(a0; f_tilde') = {sol.g_at_opt:.1e}"
    ok = abs(sol.g_at_opt) < 1e-8 * K and abs(sol.h_at_opt) < 1e-8 and sol.s_star < sol.a0 < sol.S_star
    return ok, (f"s* = {sol.s_star:.10g}, a0 = {sol.a0:.10g}, S* = {sol.S_star:.10g}, "
                f"|G| = {abs(sol.g_at_opt):.1e}, |H| = {abs(sol.h_at_opt):.1e}")


def fit_conditions(sol: PolicySolution):
    f = sol.fit
    ok = f.passed
    if f.right_curvature is not None and not f.bounded_variation:
        ok = ok and abs(f.right_curvature) < 1e-4
    detail = f"value gap {f.value_gap:.1e}, slope gap {f.slope_gap:.1e}"
    if f.slope_at_S is not None:
        detail += f", slope at S* {f.slope_at_S:.1e}"
    if f.right_curvature is not None:
        detail += f", curvature at a0+ {f.right_curvature:.1e}"
    return ok, detail


def identity_suite(k: ScaleKernel, spec: CostSpec, n: int = 50, seed: int = 7):
    rng = np.random.default_rng(seed)
    worst = worst_fd = 0.0
    C, K, q, phi = spec.C, spec.K, spec.q, k.phi_q
    for _ in range(n):
        s = rng.uniform(-3.0, 1.0)
        x = s + rng.uniform(0.05, 4.0)
        L = x - s
        # interchange of f and f_tilde
        lhs = psi_transform(spec, phi, s, "f")
        rhs = psi_transform(spec, phi, s, "f_tilde") - C * q / phi * (1.0 / phi + s)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
        lhs = phi_convolution(k, spec, s, x, "f")
        rhs = phi_convolution(k, spec, s, x, "f_tilde") - C * (
            s * eval_kernel(k, "Z", L) + eval_kernel(k, "Zbar", L) - x)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
        # k(s, x) against the expectations it is assembled from
        raw = resolvent_cost(k, x, s, spec.integrand("f")) - C * overshoot_expectation(k, x, s) \
            + K * ruin_lt(k, L) + C * x
        kv = k_func(k, spec, s, x)
        worst = max(worst, abs(kv - raw) / (1 + abs(kv)))
        # unit running cost
        lhs = resolvent_cost(k, x, s, 1.0)
        worst = max(worst, abs(lhs - (1.0 - ruin_lt(k, L)) / q) / (1 + abs(lhs)))
        # H is the x-derivative of G
        eps = 1e-4
        fd = (g_func(k, spec, s, x + eps) - g_func(k, spec, s, x - eps)) / (2 * eps)
        hv = h_func(k, spec, s, x)
        worst_fd = max(worst_fd, abs(fd - hv) / (1 + abs(hv)))
    ok = worst < 1e-8 and worst_fd < 1e-6
    return ok, f"worst defect {worst:.1e} (algebraic), {worst_fd:.1e} (dG/dx) over {n} random points"


def monte_carlo_rows(sol: PolicySolution, sim: mc.SimConfig, auto_horizon: bool = True):
    """Estimates of the value function and exit functionals next to their analytic values."""
    k, spec, model = sol.kernel, sol.spec, sol.kernel.model
    rows = []

    def row(name, est, analytic):
        rows.append([name, est.mean, est.std_error, float(analytic), est.z_score(float(analytic)),
                     est.n_paths, est.horizon_bias_bound])

    def cfg_for(proxy, scale):
        if not auto_horizon:
            return sim
        se_guess = scale / np.sqrt(sim.n_paths)
        return replace(sim, horizon=mc.horizon_for_budget(proxy, spec.q, 0.1 * se_guess))

    if sol.kind == "ss":
        v0 = value_function(sol, 0.0)
        proxy = mc.ss_cost_proxy(model, sim, spec, sol.s_star, sol.S_star, 0.0)
        row("v_ss(0)", mc.estimate_ss_cost(model, cfg_for(proxy, 0.5 * abs(v0)), spec, sol.s_star,
                                           sol.S_star, 0.0), v0)
    bspec = replace(spec, K=0.0)
    bsol = sol if sol.kind == "barrier" else solve_barrier(k, bspec)
    vb = barrier_value(k, bspec, 0.0, bsol.a0)
    proxy = mc.barrier_cost_proxy(model, sim, bspec, bsol.a0, 0.0)
    row("v_barrier(0)", mc.estimate_barrier_cost(model, cfg_for(proxy, 0.5 * abs(vb)), bspec, bsol.a0, 0.0), vb)
    ecfg = cfg_for(1.0, 0.5)
    row("ruin_lt(1)", mc.estimate_exit_functional(model, ecfg, "ruin_lt", 1.0, 0.0, spec.q), ruin_lt(k, 1.0))
    row("overshoot(1,0)", mc.estimate_exit_functional(model, ecfg, "overshoot", 1.0, 0.0, spec.q),
        overshoot_expectation(k, 1.0, 0.0))
    return rows


def run_all(model: LevyModel, spec: CostSpec, n_terms: int = 1000, tail: bool = True,
            sim: mc.SimConfig | None = None, auto_horizon: bool = True) -> list[CheckResult]:
    results = []
    try:
        k = build_kernel(model, spec.q, n_terms, tail)
    except Exception as exc:
        return [CheckResult("scale kernel", False, f"{type(exc).__name__}: {exc}")]
    results.append(_guard("laplace identity", lambda: laplace_identity(k)))
    results.append(_guard("boundary values", lambda: boundary_values(k)))
    if isinstance(model, BetaFamily):
        results.append(_guard("root interlacing", lambda: root_structure(k)))
    holder = {}

    def solved():
        holder["sol"] = solve(k, spec)
        return solver_residuals(holder["sol"])

    results.append(_guard("solver residuals", solved))
    if "sol" in holder:
        results.append(_guard("fit conditions", lambda: fit_conditions(holder["sol"])))
    results.append(_guard("identities", lambda: identity_suite(k, spec)))
    if sim is not None and "sol" in holder:
        def mc_check():
            rows = monte_carlo_rows(holder["sol"], sim, auto_horizon)
            worst = max(abs(r[4]) for r in rows)
            return worst < 3.0, ", ".join(f"{r[0]} z={r[4]:+.2f}" for r in rows)

        results.append(_guard("monte carlo", mc_check))
    return results
