import numpy as np
import pytest

from levy_inventory.cost_model import CostSpec
from levy_inventory.levy_models import BetaFamily, BrownianDrift
from levy_inventory.policy_solver import solve_barrier, solve_ss
from levy_inventory.scale_fns import build_kernel

Q = 0.03


def beta_model(sigma):
    return BetaFamily(delta_hat=0.1, sigma=sigma, alpha=3.0, beta=1.0, varpi=0.1, lam=1.5)


@pytest.fixture(scope="session")
def models():
    return {0.0: beta_model(0.0), 0.2: beta_model(0.2)}


@pytest.fixture(scope="session")
def kernels(models):
    return {s: build_kernel(m, Q) for s, m in models.items()}


@pytest.fixture(scope="session")
def brownian_kernel():
    return build_kernel(BrownianDrift(0.0, np.sqrt(2.0)), 0.04)


@pytest.fixture(scope="session")
def spec():
    return CostSpec(C=10.0, K=10.0, q=Q)


@pytest.fixture(scope="session")
def barrier_spec():
    return CostSpec(C=10.0, K=0.0, q=Q)


@pytest.fixture(scope="session")
def solutions(kernels, spec):
    return {s: solve_ss(k, spec) for s, k in kernels.items()}


@pytest.fixture(scope="session")
def barriers(kernels, barrier_spec):
    return {s: solve_barrier(k, barrier_spec) for s, k in kernels.items()}


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number, name, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[7:9])):
            terminalreporter.write_line(line)
