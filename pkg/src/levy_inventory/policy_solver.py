"""Optimal (s, S) and barrier policies.

All algebra happens in the tilted coordinate v_tilde(x) = v(x) + C x.
The pair (s*, S*) is the simultaneous zero of

    G(s, x) = K + int_s^x Psi(y; f_tilde') Thetabar(x - y) dy
    H(s, x) = dG/dx

For polynomial costs Psi(.; f_tilde') is a polynomial, so both integrals
reduce to Taylor moments of Theta and Thetabar (see ScaleKernel).  Every
formula below is written so that exp(Phi x) growth cancels analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from . import cost_model
from .cost_model import CostSpec, psi_of
from .errors import BracketError, ConvergenceError, SpecError
from .levy_models import variation_class
from .numerics import one_sided_curvature, one_sided_slope, one_sided_value
from .scale_fns import ScaleKernel, eval_kernel


@dataclass(frozen=True)
class FitDiagnostics:
    left_value: float
    right_value: float
    left_slope: float
    right_slope: float
    slope_at_S: float | None
    bounded_variation: bool
    left_curvature: float | None = None
    right_curvature: float | None = None
    tolerance: float = 1e-6

    @property
    def value_gap(self) -> float:
        return abs(self.left_value - self.right_value) / (1.0 + abs(self.left_value))

    @property
    def slope_gap(self) -> float:
        return abs(self.left_slope - self.right_slope)

    @property
    def passed(self) -> bool:
        ok = self.value_gap < self.tolerance
        if not self.bounded_variation:
            ok = ok and self.slope_gap < self.tolerance
        if self.slope_at_S is not None:
            ok = ok and abs(self.slope_at_S) < self.tolerance
        return ok


@dataclass(frozen=True, eq=False)
class PolicySolution:
    kind: str  # "ss" or "barrier"
    a0: float
    kernel: ScaleKernel
    spec: CostSpec
    s_star: float | None = None
    S_star: float | None = None
    g_at_opt: float = 0.0
    h_at_opt: float = 0.0
    fit: FitDiagnostics | None = field(default=None, compare=False)

    @property
    def threshold(self) -> float:
        return self.s_star if self.kind == "ss" else self.a0


# ---------------------------------------------------------------------------
# G, H and k


def _taylor(k: ScaleKernel, spec: CostSpec, s):
    """Psi^(m)(s; f_tilde') for m = 0..deg, or None for non-polynomial costs."""
    h = spec.integrand("f_tilde_prime")
    if h.poly is None:
        return None
    return cost_model.taylor_at(h, k.phi_q, s)


def _g_quad(k: ScaleKernel, spec: CostSpec, s: float, x: float) -> float:
    h = spec.integrand("f_tilde_prime")
    g = lambda y: float(psi_of(h, k.phi_q, y)) * eval_kernel(k, "ThetaBar", x - y)
    val, _ = integrate.quad(g, s, x, limit=200, epsrel=1e-11)
    return spec.K + val


def _h_quad(k: ScaleKernel, spec: CostSpec, s: float, x: float) -> float:
    h = spec.integrand("f_tilde_prime")
    g = lambda y: float(psi_of(h, k.phi_q, y)) * eval_kernel(k, "Theta", x - y)
    val, _ = integrate.quad(g, s, x, limit=200, epsrel=1e-11)
    return float(psi_of(h, k.phi_q, x)) * k.w_zero + val


def _g(k: ScaleKernel, spec: CostSpec, s, x):
    s, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    L = np.maximum(x - s, 0.0)
    tay = _taylor(k, spec, s)
    if tay is None:
        out = np.vectorize(lambda a, b: _g_quad(k, spec, a, b) if b > a else spec.K)(s, x)
        return out
    out = spec.K + sum(dm * k.thetabar_moment(L, m) for m, dm in enumerate(tay))
    return out


def _h(k: ScaleKernel, spec: CostSpec, s, x):
    s, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    L = np.maximum(x - s, 0.0)
    tay = _taylor(k, spec, s)
    if tay is None:
        return np.vectorize(lambda a, b: _h_quad(k, spec, a, b))(s, x)
    at_x = sum(dm * L**m / np.prod(np.arange(1, m + 1)) for m, dm in enumerate(tay))
    return at_x * k.w_zero + sum(dm * k.theta_moment(L, m) for m, dm in enumerate(tay))


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def g_func(k: ScaleKernel, spec: CostSpec, s, x):
    """G(s, x) for x > s."""
    if np.any(np.asarray(x) <= np.asarray(s)):
        raise ValueError("G needs x > s")
    return _out(_g(k, spec, s, x))


def g_func_direct(k: ScaleKernel, spec: CostSpec, s, x):
    """G(s, x) = Phi Psi(s; f_tilde) Wbar(x - s) + K - phi_s(x; f_tilde), as written."""
    s, x = np.asarray(s, dtype=float), np.asarray(x, dtype=float)
    ft = spec.integrand("f_tilde")
    val = k.phi_q * psi_of(ft, k.phi_q, s) * eval_kernel(k, "Wbar", x - s) + spec.K \
        - cost_model.conv_full(k, ft, s, x)
    return _out(val)


def h_func(k: ScaleKernel, spec: CostSpec, s, x):
    """H(s, x) = dG/dx for x > s."""
    if np.any(np.asarray(x) <= np.asarray(s)):
        raise ValueError("H needs x > s")
    return _out(_h(k, spec, s, x))


def k_func(k: ScaleKernel, spec: CostSpec, s, x):
    """k(s, x) = Thetabar(x-s)[Psi(s; f_tilde) - (q/Phi)(K + C mu/q)] + G(s, x)."""
    if np.any(np.asarray(x) <= np.asarray(s)):
        raise ValueError("k needs x > s")
    s, x = np.asarray(s, dtype=float), np.asarray(x, dtype=float)
    lead = psi_of(spec.integrand("f_tilde"), k.phi_q, s) - k.q / k.phi_q * (spec.K + spec.C * k.mu / k.q)
    return _out(eval_kernel(k, "ThetaBar", x - s) * lead + _g(k, spec, s, x))


def _level_at_S(k: ScaleKernel, spec: CostSpec, s, S):
    """v_tilde_{s,S}(S)."""
    phi, q = k.phi_q, k.q
    base = phi / q * psi_of(spec.integrand("f_tilde"), phi, s) - spec.K - spec.C * k.mu / q
    return base + phi / q * _g(k, spec, s, S) / eval_kernel(k, "ThetaBar", np.asarray(S) - np.asarray(s))


def expected_cost_ss_tilde(k: ScaleKernel, spec: CostSpec, s, S, x):
    s, S, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s, S, x)))
    if np.any(S <= s):
        raise ValueError("need S > s")
    g_sS = _g(k, spec, s, S)
    tb = eval_kernel(k, "ThetaBar", S - s)
    at_S = _level_at_S(k, spec, s, S)
    return _out(-eval_kernel(k, "ThetaBar", x - s) / tb * g_sS + _g(k, spec, s, x) + at_S)


def expected_cost_ss(k: ScaleKernel, spec: CostSpec, s, S, x):
    """Expected discounted cost v_{s,S}(x) of an arbitrary (s, S) policy."""
    return _out(expected_cost_ss_tilde(k, spec, s, S, x) - spec.C * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# solving


def _smallest_crossing(fn: Callable[[float], float], start: float, first_step: float = 0.05,
                       growth: float = 1.5, limit: int = 200) -> tuple[float, float]:
    """Scan right from ``start`` for the first sign change from negative to positive."""
    lo, step = start, first_step
    for _ in range(limit):
        hi = lo + step
        if fn(hi) > 0:
            return lo, hi
        lo, step = hi, step * growth
    raise BracketError("no sign change found to the right")


def optimal_S(k: ScaleKernel, spec: CostSpec, s: float, a0: float) -> float:
    """Smallest minimiser of G(s, .) beyond a0, i.e. the first upward zero of H(s, .)."""
    hfun = lambda x: float(_h(k, spec, s, x))
    lo, hi = _smallest_crossing(hfun, a0)
    return optimize.brentq(hfun, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def min_g(k: ScaleKernel, spec: CostSpec, s: float, a0: float) -> float:
    if s >= a0:
        return spec.K
    return float(_g(k, spec, s, optimal_S(k, spec, s, a0)))


def solve_ss(k: ScaleKernel, spec: CostSpec, tol: float = 1e-12) -> PolicySolution:
    if spec.K <= 0:
        raise SpecError("the (s, S) solver needs K > 0; use solve_barrier for K = 0")
    a0 = cost_model.a0_root(spec, k.phi_q)
    m = lambda s: min_g(k, spec, s, a0)
    hi, step = a0, 0.25
    for _ in range(80):
        lo = hi - step
        if m(lo) < 0:
            break
        hi, step = lo, 2.0 * step
    else:
        raise BracketError("min_S G(s, S) stays positive as s decreases")
    s_star = optimize.brentq(m, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=300)
    S_star = optimal_S(k, spec, s_star, a0)
    g_res = float(_g(k, spec, s_star, S_star))
    h_res = float(_h(k, spec, s_star, S_star))
    if not (s_star < a0 < S_star):
        raise ConvergenceError("solved thresholds do not straddle a0")
    sol = PolicySolution("ss", a0, k, spec, s_star, S_star, g_res, h_res)
    return _with_fit(sol)


def solve_barrier(k: ScaleKernel, spec: CostSpec) -> PolicySolution:
    if spec.K != 0:
        raise SpecError("the barrier policy is optimal only for K = 0")
    a0 = cost_model.a0_root(spec, k.phi_q)
    res = float(psi_of(spec.integrand("f_tilde_prime"), k.phi_q, a0))
    return _with_fit(PolicySolution("barrier", a0, k, spec, g_at_opt=res))


def solve(k: ScaleKernel, spec: CostSpec) -> PolicySolution:
    return solve_ss(k, spec) if spec.K > 0 else solve_barrier(k, spec)


# ---------------------------------------------------------------------------
# value functions


def value_function_tilde(sol: PolicySolution, x):
    if sol.kind == "barrier":
        return barrier_value_tilde(sol.kernel, sol.spec, x, sol.a0)
    k, spec = sol.kernel, sol.spec
    x = np.asarray(x, dtype=float)
    return _out(_g(k, spec, sol.s_star, x) + _level_at_S(k, spec, sol.s_star, sol.S_star))


def value_function(sol: PolicySolution, x):
    """Optimal expected cost v(x)."""
    return _out(value_function_tilde(sol, x) - sol.spec.C * np.asarray(x, dtype=float))


def value_function_direct(sol: PolicySolution, x):
    """The (s*, S*) value written with Z, Zbar and phi_s(x; f), as an independent check."""
    k, spec = sol.kernel, sol.spec
    s = sol.threshold
    x = np.asarray(x, dtype=float)
    phi, q, C = k.phi_q, k.q, spec.C
    f = spec.integrand("f")
    L = x - s
    val = (phi / q * psi_of(f, phi, s) + C / phi) * eval_kernel(k, "Z", L) \
        - C * (eval_kernel(k, "Zbar", L) + k.mu / q) - cost_model.conv_full(k, f, s, x)
    return _out(val)


def barrier_value_tilde(k: ScaleKernel, spec: CostSpec, x, a0: float | None = None):
    if spec.K != 0:
        raise SpecError("barrier value needs K = 0")
    if a0 is None:
        a0 = cost_model.a0_root(spec, k.phi_q)
    from .scale_fns import reflected_running_cost

    ft = spec.integrand("f_tilde")
    return _out(reflected_running_cost(k, x, a0, ft) - spec.C * k.mu / k.q)


def barrier_value(k: ScaleKernel, spec: CostSpec, x, a0: float | None = None):
    """Expected cost of reflecting the inventory at a0 (optimal when K = 0)."""
    return _out(barrier_value_tilde(k, spec, x, a0) - spec.C * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# fit diagnostics


def fit_diagnostics(sol: PolicySolution) -> FitDiagnostics:
    bounded = variation_class(sol.kernel.model).bounded
    vt = lambda y: float(value_function_tilde(sol, y))
    t = sol.threshold
    left_v, right_v = one_sided_value(vt, t, -1), one_sided_value(vt, t, +1)
    left_d, right_d = one_sided_slope(vt, t, -1), one_sided_slope(vt, t, +1)
    slope_S = None
    curv_l = curv_r = None
    if sol.kind == "ss":
        slope_S = (one_sided_slope(vt, sol.S_star, -1) + one_sided_slope(vt, sol.S_star, +1)) / 2.0
    else:
        curv_l, curv_r = one_sided_curvature(vt, t, -1), one_sided_curvature(vt, t, +1)
    return FitDiagnostics(left_v, right_v, left_d, right_d, slope_S, bounded, curv_l, curv_r)


def _with_fit(sol: PolicySolution) -> PolicySolution:
    object.__setattr__(sol, "fit", fit_diagnostics(sol))
    return sol
