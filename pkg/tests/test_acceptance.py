"""Acceptance criteria on the canonical configuration.

Each test logs one PASS/FAIL line, shown in the terminal summary, then asserts.
"""

import time

import numpy as np
import pytest

from levy_inventory import checks
from levy_inventory.cost_model import CostSpec
from levy_inventory.mc_simulator import SimConfig
from levy_inventory.policy_solver import (
    barrier_value,
    expected_cost_ss,
    expected_cost_ss_tilde,
    solve_barrier,
    solve_ss,
    value_function,
)
from levy_inventory.scale_fns import build_kernel, eval_kernel, laplace_check

from conftest import Q

SIGMAS = (0.0, 0.2)


def test_laplace_identity(kernels, brownian_kernel, models, acceptance_log):
    start = time.perf_counter()
    ks = {f"beta sigma={s}": build_kernel(m, Q) for s, m in models.items()}
    ks["brownian"] = brownian_kernel
    worst = 0.0
    for k in ks.values():
        for s in k.phi_q + np.linspace(0.5, 5.0, 10):
            worst = max(worst, abs(laplace_check(k, s) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 10.0
    acceptance_log(1, "Laplace identity", ok, f"max defect {worst:.1e}, {elapsed:.1f} s incl. kernel builds")
    assert ok


def test_boundary_asymptotics(kernels, acceptance_log):
    w0_diff = float(eval_kernel(kernels[0.2], "W", 0.0))
    w0_bv = float(eval_kernel(kernels[0.0], "W", 0.0))
    slope = float(eval_kernel(kernels[0.2], "W", 1e-6) - w0_diff) / 1e-6
    rel = abs(slope - 2.0 / 0.2**2) / (2.0 / 0.2**2)
    ok = abs(w0_diff) < 1e-8 and abs(w0_bv - 10.0) < 1e-2 and rel < 0.01
    acceptance_log(2, "boundary asymptotics", ok,
                   f"W(0)={w0_diff:.1e} (sigma=0.2), W(0)={w0_bv:.6f} (sigma=0), W'(0+) rel err {rel:.1e}")
    assert ok


def test_root_interlacing(kernels, acceptance_log):
    results = [checks.root_structure(kernels[s], 50) for s in SIGMAS]
    ok = all(r[0] for r in results)
    acceptance_log(3, "root interlacing", ok, "; ".join(r[1] for r in results))
    assert ok


def test_solver_residuals(kernels, spec, acceptance_log):
    details, ok = [], True
    for s in SIGMAS:
        start = time.perf_counter()
        sol = solve_ss(kernels[s], spec)
        elapsed = time.perf_counter() - start
        good, detail = checks.solver_residuals(sol)
        ok = ok and good and elapsed < 5.0
        details.append(f"sigma={s}: |G|={abs(sol.g_at_opt):.1e} |H|={abs(sol.h_at_opt):.1e} {elapsed:.2f} s")
    acceptance_log(4, "solver residuals", ok, "; ".join(details))
    assert ok


def test_fit_conditions(solutions, acceptance_log):
    bv, ubv = solutions[0.0].fit, solutions[0.2].fit
    ok = bv.value_gap < 1e-6 and ubv.slope_gap < 1e-6 and abs(ubv.slope_at_S) < 1e-6
    acceptance_log(5, "fit conditions", ok,
                   f"sigma=0 value gap {bv.value_gap:.1e}; sigma=0.2 slope gap {ubv.slope_gap:.1e}, "
                   f"slope at S* {abs(ubv.slope_at_S):.1e}")
    assert ok


def test_grid_oracle(solutions, acceptance_log):
    step, n = 0.01, 1000
    rng = np.random.default_rng(11)
    details, ok = [], True
    for sigma in SIGMAS:
        sol = solutions[sigma]
        k, spec, a0 = sol.kernel, sol.spec, sol.a0
        s_grid = a0 - step * (n - np.arange(n + 1))
        S_grid = a0 + step * np.arange(n + 1)
        best = (np.inf, None, None)
        for i, s in enumerate(s_grid):
            S = S_grid[S_grid > s]
            vals = expected_cost_ss_tilde(k, spec, s, S, 0.0)
            j = int(np.argmin(vals))
            if vals[j] < best[0]:
                best = (vals[j], s, S[j])
        near = abs(best[1] - sol.s_star) <= step and abs(best[2] - sol.S_star) <= step
        worst = -np.inf
        for _ in range(200):
            s = s_grid[rng.integers(0, n)]
            S = S_grid[rng.integers(1, n + 1)]
            for x in (sol.s_star - 1.0, 0.0, sol.S_star + 1.0):
                opt = float(value_function(sol, x))
                other = float(expected_cost_ss(k, spec, s, S, x))
                worst = max(worst, (opt - other) / (1.0 + abs(opt)))
        good = near and worst <= 1e-10
        ok = ok and good
        details.append(f"sigma={sigma}: grid argmin ({best[1]:.3f}, {best[2]:.3f}) vs "
                       f"({sol.s_star:.3f}, {sol.S_star:.3f}), worst excess {worst:.1e}")
    acceptance_log(6, "grid oracle", ok, "; ".join(details))
    assert ok


@pytest.mark.slow
def test_monte_carlo(solutions, acceptance_log):
    start = time.perf_counter()
    rows = checks.monte_carlo_rows(solutions[0.2], SimConfig(), auto_horizon=True)
    elapsed = time.perf_counter() - start
    worst = max(abs(r[4]) for r in rows)
    ok = worst < 3.0 and elapsed < 300.0
    acceptance_log(7, "Monte Carlo", ok,
                   ", ".join(f"{r[0]} z={r[4]:+.2f}" for r in rows) + f", {elapsed:.0f} s")
    assert ok


def test_fixed_cost_to_zero(kernels, acceptance_log):
    details, ok = [], True
    for sigma in SIGMAS:
        k = kernels[sigma]
        bspec = CostSpec(C=10.0, K=0.0, q=Q)
        bar = solve_barrier(k, bspec)
        grid = np.linspace(bar.a0 - 5.0, bar.a0 + 5.0, 201)
        vb = barrier_value(k, bspec, grid, bar.a0)
        sols = [solve_ss(k, CostSpec(C=10.0, K=K, q=Q)) for K in (10.0, 5.0, 1.0, 0.1, 0.01)]
        s_vals = np.array([s.s_star for s in sols])
        S_vals = np.array([s.S_star for s in sols])
        gaps = np.array([np.max(np.abs(value_function(s, grid) - vb)) for s in sols])
        good = (np.all(np.diff(s_vals) > 0) and np.all(s_vals < bar.a0) and np.all(np.diff(S_vals) < 0)
                and np.all(S_vals > bar.a0) and np.all(np.diff(gaps) < 0))
        ok = ok and good
        details.append(f"sigma={sigma}: gaps " + " > ".join(f"{g:.3g}" for g in gaps))
    acceptance_log(8, "K to 0 convergence", ok, "; ".join(details))
    assert ok


def test_monotone_in_unit_cost(kernels, acceptance_log):
    details, ok = [], True
    for sigma in SIGMAS:
        k = kernels[sigma]
        grid = np.linspace(-5.0, 5.0, 201)
        vals = np.array([value_function(solve_ss(k, CostSpec(C=C, K=10.0, q=Q)), grid)
                         for C in (0.0, 1.0, 5.0, 10.0, 20.0, 30.0)])
        worst = float(np.min(np.diff(vals, axis=0)))
        good = worst >= 0.0
        ok = ok and good
        details.append(f"sigma={sigma}: smallest increment {worst:.3g}")
    acceptance_log(9, "monotone in C", ok, "; ".join(details))
    assert ok


def test_barrier_smoothness(barriers, acceptance_log):
    slopes = {s: max(abs(barriers[s].fit.left_slope), abs(barriers[s].fit.right_slope)) for s in SIGMAS}
    curv = abs(barriers[0.2].fit.right_curvature)
    ok = all(v < 1e-6 for v in slopes.values()) and curv < 1e-4
    acceptance_log(10, "barrier smoothness", ok,
                   f"|v'(a0)| {slopes[0.0]:.1e} (sigma=0), {slopes[0.2]:.1e} (sigma=0.2); "
                   f"|v''(a0+)| {curv:.1e}")
    assert ok


def test_identity_suite(kernels, spec, acceptance_log):
    results = [checks.identity_suite(kernels[s], spec, n=50) for s in SIGMAS]
    ok = all(r[0] for r in results)
    acceptance_log(11, "identity suite", ok, "; ".join(f"sigma={s}: {r[1]}" for s, r in zip(SIGMAS, results)))
    assert ok
