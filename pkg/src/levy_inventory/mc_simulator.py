"""Monte Carlo oracle for the analytic formulas.

Jumps smaller than ``jump_cutoff_eps`` are replaced by a Gaussian with the
same variance; the remaining jumps form a compound Poisson process whose
sizes are drawn by inverting a tabulated tail mass.  Policies are applied
pathwise and discounted costs accumulated up to a finite horizon, whose
truncation error is bounded and reported rather than corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

import os

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

from . import _mc_kernels as kern  # noqa: E402
from .cost_model import CostSpec, as_integrand
from .errors import SpecError
from .levy_models import BrownianDrift, LevyModel, jump_tail_mass, mean_mu, truncated_moment

TABLE_SIZE = 4096


@dataclass(frozen=True)
class SimConfig:
    jump_cutoff_eps: float = 1e-3
    time_step: float = 1e-3
    horizon: float = 300.0
    n_paths: int = 10_000
    seed: int = 0
    antithetic: bool = False
    coarse_step: float = 0.05
    clamp_creep: bool = True
    workers: int | None = None

    def __post_init__(self):
        if self.jump_cutoff_eps <= 0 or self.time_step <= 0 or self.horizon <= 0:
            raise ValueError("eps, time_step and horizon must be positive")
        if self.n_paths < 2:
            raise ValueError("need at least two paths")
        if self.coarse_step < self.time_step:
            raise ValueError("coarse_step must be at least time_step")


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    std_error: float
    n_paths: int
    horizon_bias_bound: float

    def z_score(self, target: float) -> float:
        return (self.mean - target) / self.std_error if self.std_error > 0 else math.copysign(np.inf, self.mean - target) if self.mean != target else 0.0


@dataclass(frozen=True)
class _Dynamics:
    drift: float
    sd: float
    rate: float
    log_tail: np.ndarray
    log_z: np.ndarray
    down_speed: float
    mean_jump: float


def _dynamics(model: LevyModel, eps: float) -> _Dynamics:
    if isinstance(model, BrownianDrift):
        empty = np.zeros(2)
        return _Dynamics(model.mu_hat, model.sigma, 0.0, empty, empty, abs(model.mu_hat) + model.sigma, 0.0)
    big_mean = truncated_moment(model, 1, eps)
    drift = mean_mu(model) + big_mean
    sd = math.sqrt(model.sigma**2 + truncated_moment(model, 2, 0.0, eps))
    rate = float(jump_tail_mass(model, eps))
    decay = model.alpha * model.beta
    z_max = eps + (math.log(model.varpi / decay / (rate * 1e-16)) + 5.0) / decay
    z = np.geomspace(eps, z_max, TABLE_SIZE)
    tail = jump_tail_mass(model, z)
    good = tail > 0
    return _Dynamics(drift, sd, rate, np.log(tail[good]), np.log(z[good]),
                     big_mean + abs(drift) + sd, big_mean / rate)


def _seeds(cfg: SimConfig) -> np.ndarray:
    n = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    return np.random.SeedSequence(cfg.seed).generate_state(n, dtype=np.uint32).astype(np.int64)


def _poly_coeffs(spec_or_h) -> tuple[float, float, float]:
    if spec_or_h is None:
        return 0.0, 0.0, 0.0
    h = spec_or_h.integrand("f") if isinstance(spec_or_h, CostSpec) else as_integrand(spec_or_h)
    p = h.poly
    if p is None or p.degree() > 2:
        raise SpecError("the simulator handles polynomial running costs of degree at most two")
    c = np.zeros(3)
    c[: p.coef.size] = p.coef
    return float(c[0]), float(c[1]), float(c[2])


def _run(model, cfg, mode, x, lower, upper, level_S, q, coeffs):
    dyn = _dynamics(model, cfg.jump_cutoff_eps)
    if cfg.workers:
        numba.set_num_threads(min(cfg.workers, numba.config.NUMBA_NUM_THREADS))
    res = kern.simulate_paths(_seeds(cfg), float(x), mode, float(lower), float(upper), float(level_S),
                              float(q), dyn.drift, dyn.sd, dyn.rate, dyn.log_tail, dyn.log_z,
                              cfg.time_step, cfg.coarse_step, cfg.horizon, *coeffs,
                              cfg.clamp_creep, cfg.antithetic)
    return res, dyn


def _summarise(samples: np.ndarray, bias: float) -> CostEstimate:
    # antithetic pairs are averaged first so the standard error uses independent units
    per_unit = samples.mean(axis=1)
    n = per_unit.size
    return CostEstimate(float(per_unit.mean()), float(per_unit.std(ddof=1) / math.sqrt(n)),
                        samples.size, bias)


def _band_max(coeffs, lo, hi) -> float:
    y = np.linspace(lo, hi, 257)
    return float(np.max(np.abs(coeffs[0] + coeffs[1] * y + coeffs[2] * y * y)))


def horizon_for_budget(proxy: float, q: float, budget: float) -> float:
    """Smallest T with exp(-q T) * proxy <= budget."""
    return max(math.log(max(proxy, budget) / budget) / q, 1.0)


def ss_cost_proxy(model: LevyModel, cfg: SimConfig, spec: CostSpec, s: float, S: float, x: float) -> float:
    """Crude bound on the expected cost-to-go at the horizon, per unit discount."""
    dyn = _dynamics(model, cfg.jump_cutoff_eps)
    coeffs = _poly_coeffs(spec)
    lo, hi = s - dyn.mean_jump - 1.0, max(S, x) + 1.0
    order_rate = dyn.down_speed / (S - s)
    return (_band_max(coeffs, lo, hi) + (spec.K + spec.C * (hi - lo)) * order_rate) / spec.q


def barrier_cost_proxy(model: LevyModel, cfg: SimConfig, spec: CostSpec, s: float, x: float) -> float:
    dyn = _dynamics(model, cfg.jump_cutoff_eps)
    coeffs = _poly_coeffs(spec)
    return (_band_max(coeffs, s, max(s, x) + 3.0) + spec.C * dyn.down_speed) / spec.q


# ---------------------------------------------------------------------------


def simulate_increment_stream(model: LevyModel, cfg: SimConfig, seed: int | None = None) -> np.ndarray:
    """Increments over consecutive steps of length ``time_step`` up to the horizon."""
    dyn = _dynamics(model, cfg.jump_cutoff_eps)
    n_steps = int(round(cfg.horizon / cfg.time_step))
    s = int(np.random.SeedSequence(cfg.seed if seed is None else seed).generate_state(1)[0])
    return kern.increments(s, n_steps, cfg.time_step, dyn.drift, dyn.sd, dyn.rate, dyn.log_tail, dyn.log_z)


def estimate_ss_cost(model: LevyModel, cfg: SimConfig, spec: CostSpec, s: float, S: float, x: float,
                     parts: bool = False):
    """Expected discounted cost of ordering up to S whenever the level drops below s.

    With ``parts`` the running, fixed and proportional components are also
    returned as separate estimates.
    """
    if not S > s:
        raise ValueError("need S > s")
    coeffs = _poly_coeffs(spec)
    res, _ = _run(model, cfg, kern.SS, x, s, np.inf, S, spec.q, coeffs)
    bias = math.exp(-spec.q * cfg.horizon) * ss_cost_proxy(model, cfg, spec, s, S, x)
    total = res[..., 0] + spec.K * res[..., 1] + spec.C * res[..., 2]
    est = _summarise(total, bias)
    if not parts:
        return est
    return est, {name: _summarise(res[..., i], bias) for i, name in enumerate(("running", "orders", "units"))}


def estimate_barrier_cost(model: LevyModel, cfg: SimConfig, spec: CostSpec, s: float, x: float,
                          parts: bool = False):
    """Expected discounted cost of reflecting the level at s (pushes cost C per unit)."""
    if spec.K != 0:
        raise SpecError("barrier policies carry no fixed cost")
    coeffs = _poly_coeffs(spec)
    res, _ = _run(model, cfg, kern.BARRIER, x, s, np.inf, s, spec.q, coeffs)
    bias = math.exp(-spec.q * cfg.horizon) * barrier_cost_proxy(model, cfg, spec, s, x)
    total = res[..., 0] + spec.C * res[..., 1]
    est = _summarise(total, bias)
    if not parts:
        return est
    return est, {"running": _summarise(res[..., 0], bias), "local_time": _summarise(res[..., 1], bias)}


EXIT_KINDS = ("ruin_lt", "exit_up", "overshoot", "resolvent")


def estimate_exit_functional(model: LevyModel, cfg: SimConfig, which: str, x: float, level: float,
                             q: float, h=None) -> CostEstimate:
    """Discounted first-passage functionals.

    ``ruin_lt``, ``overshoot`` and ``resolvent`` use the first time the path
    goes below ``level``; ``exit_up`` uses the first exit from [0, level].
    ``resolvent`` integrates the polynomial ``h`` up to that time.
    """
    if which not in EXIT_KINDS:
        raise ValueError(f"which must be one of {EXIT_KINDS}")
    dyn = _dynamics(model, cfg.jump_cutoff_eps)
    tail = math.exp(-q * cfg.horizon)
    if which == "exit_up":
        if level <= 0 or x > level:
            raise ValueError("need 0 < b and x <= b")
        res, _ = _run(model, cfg, kern.TWO_SIDED, x, 0.0, level, 0.0, q, (0.0, 0.0, 0.0))
        return _summarise(res[..., 1], tail)
    coeffs = _poly_coeffs(h) if which == "resolvent" else (0.0, 0.0, 0.0)
    res, _ = _run(model, cfg, kern.FIRST_PASSAGE, x, level, np.inf, 0.0, q, coeffs)
    if which == "ruin_lt":
        return _summarise(res[..., 1], tail)
    if which == "overshoot":
        return _summarise(res[..., 2], tail * (1.0 + abs(level) + dyn.mean_jump))
    band = _band_max(coeffs, level - 1.0, max(x, level) + 3.0)
    return _summarise(res[..., 0], tail * band / q)
