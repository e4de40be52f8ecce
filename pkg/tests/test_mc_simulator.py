import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from levy_inventory.cost_model import CostSpec, PiecewiseC1
from levy_inventory.errors import SpecError
from levy_inventory.levy_models import BrownianDrift, laplace_exponent, mean_mu
from levy_inventory.mc_simulator import (
    CostEstimate,
    SimConfig,
    estimate_barrier_cost,
    estimate_exit_functional,
    estimate_ss_cost,
    horizon_for_budget,
    simulate_increment_stream,
)
from levy_inventory.policy_solver import barrier_value, expected_cost_ss
from levy_inventory.scale_fns import exit_up_lt, overshoot_expectation, resolvent_cost, ruin_lt

from conftest import Q, beta_model

FAST = SimConfig(n_paths=2000, horizon=150.0, seed=11)


def within(est: CostEstimate, target: float, z: float = 4.0) -> bool:
    return abs(est.z_score(target)) < z


def test_unit_increments_match_laplace_exponent():
    m = beta_model(0.2)
    cfg = SimConfig(time_step=1.0, coarse_step=1.0, horizon=40_000.0, seed=3)
    x = simulate_increment_stream(m, cfg)
    assert x.size == 40_000
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - mean_mu(m)) < 4 * se
    var_ref = laplace_exponent(m, 1e-9, 2)
    assert x.var() == pytest.approx(var_ref, rel=0.05)
    for theta in (0.5, 1.0):
        sample = np.exp(theta * x)
        se = sample.std() / math.sqrt(x.size)
        assert abs(sample.mean() - math.exp(laplace_exponent(m, theta))) < 4 * se


def test_increment_stream_is_reproducible():
    m = beta_model(0.0)
    cfg = SimConfig(horizon=5.0, seed=9)
    a = simulate_increment_stream(m, cfg)
    assert np.array_equal(a, simulate_increment_stream(m, cfg))
    assert not np.array_equal(a, simulate_increment_stream(m, cfg, seed=10))


def test_brownian_exit_functionals(brownian_kernel):
    m = BrownianDrift(0.0, math.sqrt(2.0))
    est = estimate_exit_functional(m, FAST, "exit_up", 0.7, 2.0, 0.04)
    assert within(est, exit_up_lt(brownian_kernel, 0.7, 2.0))
    est = estimate_exit_functional(m, FAST, "ruin_lt", 1.0, 0.0, 0.04)
    assert within(est, ruin_lt(brownian_kernel, 1.0))


@pytest.mark.parametrize("sigma", [0.0, 0.2])
def test_beta_exit_functionals(kernels, sigma):
    m, k = beta_model(sigma), kernels[sigma]
    cfg = SimConfig(n_paths=1000, horizon=150.0, seed=5)
    assert within(estimate_exit_functional(m, cfg, "ruin_lt", 1.0, 0.0, Q), ruin_lt(k, 1.0))
    assert within(estimate_exit_functional(m, cfg, "overshoot", 1.0, 0.0, Q), overshoot_expectation(k, 1.0, 0.0))
    assert within(estimate_exit_functional(m, cfg, "resolvent", 1.0, 0.0, Q, Polynomial([1.0])),
                  resolvent_cost(k, 1.0, 0.0, 1.0))


def test_short_policy_costs(kernels, spec, barrier_spec):
    m, k = beta_model(0.2), kernels[0.2]
    cfg = SimConfig(n_paths=1000, horizon=horizon_for_budget(1e4, Q, 0.05), seed=21)
    s, S = -1.5, 0.0
    est = estimate_ss_cost(m, cfg, spec, s, S, 0.5)
    assert within(est, expected_cost_ss(k, spec, s, S, 0.5))
    est, parts = estimate_barrier_cost(m, cfg, barrier_spec, -1.0, 0.0, parts=True)
    assert within(est, barrier_value(k, barrier_spec, 0.0, -1.0))
    assert set(parts) == {"running", "local_time"}


def test_antithetic_pairs_count_once():
    m = beta_model(0.2)
    cfg = SimConfig(n_paths=200, horizon=20.0, antithetic=True)
    est = estimate_exit_functional(m, cfg, "ruin_lt", 1.0, 0.0, Q)
    assert est.n_paths == 200


def test_seed_determinism():
    m = beta_model(0.2)
    cfg = SimConfig(n_paths=100, horizon=20.0, seed=4)
    a = estimate_exit_functional(m, cfg, "ruin_lt", 1.0, 0.0, Q)
    b = estimate_exit_functional(m, cfg, "ruin_lt", 1.0, 0.0, Q)
    assert a == b


def test_rejects_unsupported_inputs(spec):
    m = beta_model(0.2)
    generic = CostSpec(10.0, 10.0, Q, PiecewiseC1(lambda x: x * x, lambda x: 2 * x, -0.15, 1.0, 1.0))
    cfg = SimConfig(n_paths=10, horizon=1.0)
    with pytest.raises(SpecError):
        estimate_ss_cost(m, cfg, generic, -1.0, 0.0, 0.0)
    with pytest.raises(SpecError):
        estimate_barrier_cost(m, cfg, spec, -1.0, 0.0)
    with pytest.raises(ValueError):
        estimate_ss_cost(m, cfg, spec, 0.0, -1.0, 0.0)
    with pytest.raises(ValueError):
        estimate_exit_functional(m, cfg, "nope", 1.0, 0.0, Q)
    with pytest.raises(ValueError):
        SimConfig(n_paths=1)
    with pytest.raises(ValueError):
        SimConfig(time_step=0.1, coarse_step=0.01)


def test_horizon_budget():
    T = horizon_for_budget(100.0, 0.03, 0.01)
    assert math.exp(-0.03 * T) * 100.0 == pytest.approx(0.01)
    assert horizon_for_budget(0.001, 0.03, 0.01) == 1.0


def test_z_score():
    est = CostEstimate(1.0, 0.5, 10, 0.0)
    assert est.z_score(0.0) == 2.0
    assert CostEstimate(1.0, 0.0, 10, 0.0).z_score(1.0) == 0.0
