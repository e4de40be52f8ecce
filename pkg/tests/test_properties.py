import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial
from scipy import integrate

from levy_inventory.cost_model import CostSpec, psi_of
from levy_inventory.levy_models import BetaFamily, _psi, laplace_exponent, phi_q, root_sequence
from levy_inventory.policy_solver import expected_cost_ss, solve_ss, value_function
from levy_inventory.scale_fns import build_kernel, eval_kernel, laplace_check, ruin_lt

SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@st.composite
def beta_models(draw):
    sigma = draw(st.sampled_from([0.0, 0.0, 0.1, 0.3]))
    lam = draw(st.sampled_from([0.5, 1.5, 2.5]) | st.floats(0.2, 2.8).filter(lambda v: min(abs(v - 1), abs(v - 2)) > 0.05))
    bounded = sigma == 0 and lam < 2
    if bounded:
        # the series converges like N**(lam - 2); near lam = 2 no practical N is enough
        lam = min(lam, 1.7)
    delta = draw(st.floats(0.05, 1.0)) if bounded else draw(st.floats(-0.5, 1.0))
    return BetaFamily(delta_hat=delta, sigma=sigma, alpha=draw(st.floats(0.5, 4.0)), beta=draw(st.floats(0.5, 3.0)),
                      varpi=draw(st.floats(0.02, 1.0)), lam=lam)


discounts = st.floats(0.005, 0.5)


@SLOW
@given(beta_models(), discounts)
def test_exponent_is_convex_and_inverted(m, q):
    z = np.linspace(0.0, 10.0, 41)
    assert laplace_exponent(m, 0.0) == 0.0
    assert np.all(laplace_exponent(m, z, 2) >= 0)
    phi = phi_q(m, q)
    assert phi > 0
    # psi(Phi) is a sum of terms of size |delta| Phi, so rounding scales with them
    size = abs(m.delta_hat) * phi + m.sigma**2 * phi**2
    assert abs(laplace_exponent(m, phi) - q) < 1e-10 * max(1.0, q) + 1e-14 * size
    assert phi_q(m, 2 * q) > phi


@SLOW
@given(beta_models(), discounts)
def test_roots_interlace(m, q):
    rs = root_sequence(m, q, 30)
    assert np.all(rs.xis < rs.etas) and np.all(rs.xis[1:] > rs.etas[:-1]) and rs.xis[0] > 0
    # near a pole psi is steep, so one ulp in xi already moves psi noticeably
    slack = 4 * np.finfo(float).eps * rs.xis * np.abs(_psi(m, -rs.xis, 1))
    assert np.all(np.abs(_psi(m, -rs.xis) - q) < 1e-10 * max(1.0, q) + slack)


@SLOW
@given(beta_models(), discounts)
def test_scale_function_laplace_identity(m, q):
    k = build_kernel(m, q)
    assert abs(laplace_check(k, k.phi_q + 1.0) - 1.0) < 1e-4


@SLOW
@given(beta_models(), discounts)
def test_scale_function_shape(m, q):
    k = build_kernel(m, q)
    x = np.linspace(0.01, 6.0, 60)
    w = eval_kernel(k, "W", x)
    assert np.all(w > 0)
    assert np.all(np.diff(eval_kernel(k, "Wphi", x)) >= -1e-9 * np.abs(w[1:]))
    r = ruin_lt(k, x)
    assert np.all((r > -1e-8) & (r <= 1 + 1e-12))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=3), st.floats(0.2, 5.0), st.floats(-4, 4))
def test_psi_transform_closed_form(coefs, phi, s):
    p = Polynomial(coefs)
    ref = integrate.quad(lambda y: np.exp(-phi * y) * p(y + s), 0, np.inf, epsabs=1e-12, epsrel=1e-12)[0]
    assert psi_of(p, phi, s) == pytest.approx(ref, rel=1e-9, abs=1e-10)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.sampled_from([0.0, 0.2]), st.floats(-4.0, 0.0), st.floats(0.01, 5.0), st.floats(-5.0, 5.0))
def test_optimal_policy_beats_any_other(solutions, sigma, s, width, x):
    sol = solutions[sigma]
    k, spec = sol.kernel, sol.spec
    best = value_function(sol, x)
    other = expected_cost_ss(k, spec, s, s + width, x)
    assert other >= best - 1e-8 * (1 + abs(best))


@settings(max_examples=10, deadline=None)
@given(beta_models(), st.floats(0.5, 20.0), st.floats(0.5, 20.0))
def test_solver_residuals_for_random_models(m, C, K):
    k = build_kernel(m, 0.03)
    spec = CostSpec(C, K, 0.03)
    sol = solve_ss(k, spec)
    assert sol.s_star < sol.a0 < sol.S_star
    assert abs(sol.g_at_opt) < 1e-8 * K
    assert abs(sol.h_at_opt) < 1e-8
    assume(np.isfinite(sol.S_star))
