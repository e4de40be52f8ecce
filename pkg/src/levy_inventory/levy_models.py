"""Spectrally negative Levy models.

Two families are supported: the meromorphic beta family, whose Laplace
exponent is a difference of Beta functions, and Brownian motion with
drift, used as a closed-form reference.  All evaluations accept numpy
arrays; public entry points enforce ``z >= 0`` while the ``_psi``
helpers also evaluate on the negative axis, which the root search needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, optimize, special

from .errors import BracketError, InvalidModelError, RootNotFoundError


@dataclass(frozen=True)
class BetaFamily:
    delta_hat: float
    sigma: float
    alpha: float
    beta: float
    varpi: float
    lam: float

    def __post_init__(self):
        if self.sigma < 0 or self.alpha <= 0 or self.beta <= 0 or self.varpi < 0:
            raise InvalidModelError("need sigma >= 0, alpha > 0, beta > 0, varpi >= 0")
        if not 0 < self.lam < 3 or self.lam in (1.0, 2.0):
            raise InvalidModelError("lam must lie in (0, 3) excluding 1 and 2")
        if self.sigma == 0 and self.lam < 2 and self.delta_hat <= 0:
            raise InvalidModelError("bounded-variation model needs a positive drift")
        if self.sigma == 0 and self.varpi == 0:
            raise InvalidModelError("pure drift is not a valid model")


@dataclass(frozen=True)
class BrownianDrift:
    mu_hat: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidModelError("sigma must be positive")


LevyModel = Union[BetaFamily, BrownianDrift]


@dataclass(frozen=True)
class Variation:
    """Path-variation class; ``delta`` is the natural drift when bounded."""

    bounded: bool
    delta: float | None = None


@dataclass(frozen=True)
class RootSequence:
    q: float
    phi_q: float
    xis: np.ndarray
    etas: np.ndarray
    truncation_count: int


# ---------------------------------------------------------------------------
# Gamma-function helpers that stay accurate on the negative axis


def _sinpi(x):
    k = np.round(x)
    sign = np.where(np.mod(k, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(np.pi * (x - k))


# B_2k / (2k (2k - 1)) for the Stirling series of log Gamma
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156, -3617 / 122400)
_STIRLING_FROM = 12.0


def _log_gamma_ratio_large(x, b):
    """log Gamma(x) - log Gamma(x + b) for x >= 12, without the cancellation of gammaln."""
    y = x + b
    out = -b * np.log(x) - (y - 0.5) * np.log1p(b / x) + b
    for k, c in enumerate(_STIRLING, start=1):
        out += c * (x ** (1 - 2 * k) - y ** (1 - 2 * k))
    return out


def _gamma_ratio(x, b):
    """Gamma(x) / Gamma(x + b) for real x, including negative non-integers."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x >= _STIRLING_FROM
    out[big] = np.exp(_log_gamma_ratio_large(x[big], b))
    mid = (x > 0) & ~big
    out[mid] = special.gamma(x[mid]) * special.rgamma(x[mid] + b)
    # reflection: Gamma(x)/Gamma(x+b) = Gamma(1-x-b)/Gamma(1-x) * sin(pi(x+b))/sin(pi x)
    neg = x <= 0
    if not neg.any():
        return out
    xn = x[neg]
    frac = xn - np.round(xn)  # exact, so x + b never has to be rounded inside the sines
    with np.errstate(divide="ignore", invalid="ignore"):
        out[neg] = _gamma_ratio(1.0 - xn - b, b) * _sinpi(frac + b) / np.sin(np.pi * frac)
    return out


_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def _power_diff(x, b, n):
    """x**-n - (x + b)**-n without cancellation."""
    return (x + b) ** -n * np.expm1(n * np.log1p(b / x))


def _polygamma_diff(x, b, order):
    """digamma (order 0) or trigamma (order 1) at x minus the same at x + b."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x >= _STIRLING_FROM
    xb = x[big]
    if order == 0:
        acc = -np.log1p(b / xb) - 0.5 * _power_diff(xb, b, 1)
        for k, c in enumerate(_BERNOULLI, start=1):
            acc -= c / (2 * k) * _power_diff(xb, b, 2 * k)
    else:
        acc = _power_diff(xb, b, 1) + 0.5 * _power_diff(xb, b, 2)
        for k, c in enumerate(_BERNOULLI, start=1):
            acc += c * _power_diff(xb, b, 2 * k + 1)
    out[big] = acc
    mid = (x > 0) & ~big
    xm = x[mid]
    out[mid] = special.polygamma(order, xm) - special.polygamma(order, xm + b)
    neg = x <= 0
    if neg.any():
        # reflect both terms; the sines see the exact fractional part of x
        xn = x[neg]
        frac = xn - np.round(xn)
        with np.errstate(divide="ignore", invalid="ignore"):
            if order == 0:
                trig = np.pi * (np.cos(np.pi * frac) / np.sin(np.pi * frac)
                                - np.cos(np.pi * (frac + b)) / np.sin(np.pi * (frac + b)))
                out[neg] = -_polygamma_diff(1.0 - xn - b, b, 0) - trig
            else:
                trig = np.pi**2 * (1 / np.sin(np.pi * frac) ** 2 - 1 / np.sin(np.pi * (frac + b)) ** 2)
                out[neg] = trig + _polygamma_diff(1.0 - xn - b, b, 1)
    return out


# ---------------------------------------------------------------------------
# Laplace exponent


def _ratio_derivative(x, b, order):
    """d^order/dx^order of Gamma(x)/Gamma(x + b), for order 1 or 2."""
    x = np.asarray(x, dtype=float)
    y = x + b
    pole = (y <= 0) & (y == np.round(y))
    with np.errstate(invalid="ignore"):
        r = _gamma_ratio(x, b)
        dg = _polygamma_diff(x, b, 0)
        out = r * dg if order == 1 else r * (dg * dg + _polygamma_diff(x, b, 1))
    if pole.any():
        # x + b on a pole of Gamma: r vanishes while dg blows up, so expand 1/Gamma(y) there.
        # With Q = Gamma(x) Gamma(1 - y):  R' = Q cos(pi y)  and  R'' = 2 Q cos(pi y) (digamma(x) - digamma(1 - y))
        xp = x[pole]
        cos_y = np.where(np.mod(y[pole], 2.0) == 0.0, 1.0, -1.0)
        pos = xp > 0
        Q = np.empty_like(xp)
        gap = np.empty_like(xp)
        Q[pos] = special.gamma(xp[pos]) * special.gamma(1.0 - y[pole][pos])
        gap[pos] = special.digamma(xp[pos]) - special.digamma(1.0 - y[pole][pos])
        xn = xp[~pos]
        if xn.size:
            frac = xn - np.round(xn)
            Q[~pos] = np.pi / _sinpi(xn) * _gamma_ratio(1.0 - xn - b, b)
            gap[~pos] = -_polygamma_diff(1.0 - xn - b, b, 0) - np.pi * np.cos(np.pi * frac) / np.sin(np.pi * frac)
        out[pole] = Q * cos_y if order == 1 else 2.0 * Q * cos_y * gap
    return out


def _jump_part(m: BetaFamily, z, order: int):
    b = 1.0 - m.lam
    x = m.alpha + z / m.beta
    scale = m.varpi / m.beta * special.gamma(b)
    if order == 0:
        return scale * (_gamma_ratio(x, b) - _gamma_ratio(np.array([m.alpha]), b)[0])
    return scale / m.beta**order * _ratio_derivative(x, b, order)


def _psi(model: LevyModel, z, order: int = 0):
    """Laplace exponent (or derivative) on the model's full real domain."""
    z = np.asarray(z, dtype=float)
    if isinstance(model, BrownianDrift):
        lin, s2 = model.mu_hat, model.sigma**2
    else:
        lin, s2 = model.delta_hat, model.sigma**2
    if order == 0:
        out = lin * z + 0.5 * s2 * z * z
    elif order == 1:
        out = lin + s2 * z
    else:
        out = np.full_like(z, s2)
    if isinstance(model, BetaFamily) and model.varpi > 0:
        zz = np.atleast_1d(z)
        out = out + _jump_part(model, zz, order).reshape(z.shape)
    return out


def laplace_exponent(model: LevyModel, z, order: int = 0):
    """psi(z) = log E[exp(z X_1)] or its first/second derivative, for z >= 0."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    za = np.asarray(z, dtype=float)
    if np.any(np.isnan(za)) or np.any(za < 0):
        raise ValueError("laplace_exponent needs z >= 0")
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = _psi(model, za, order)
        except FloatingPointError as exc:
            raise OverflowError("Gamma-function evaluation overflowed") from exc
    if order == 0:
        out = np.where(za == 0.0, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def mean_mu(model: LevyModel) -> float:
    """Mean of X_1, the right derivative of psi at zero."""
    return float(_psi(model, 0.0, 1))


def phi_q(model: LevyModel, q: float) -> float:
    """Largest root of psi(z) = q."""
    if q <= 0:
        raise ValueError("q must be positive")
    hi = 1.0
    for _ in range(200):
        if _psi(model, hi) > q:
            break
        hi *= 2.0
    else:
        raise BracketError("no upper bracket for Phi(q)")
    lo = 0.0
    # psi may dip below zero before rising; the largest root lies past the minimum
    if mean_mu(model) < 0:
        lo = optimize.brentq(lambda z: float(_psi(model, z, 1)), 0.0, hi, xtol=1e-15)
    return optimize.brentq(lambda z: float(_psi(model, z)) - q, lo, hi, xtol=1e-300, rtol=1e-15)


def jump_tail_mass(model: LevyModel, x) -> np.ndarray:
    """nu([x, inf)) for x > 0."""
    x = np.asarray(x, dtype=float)
    if isinstance(model, BrownianDrift):
        return np.zeros_like(x)
    m = model
    w = np.exp(-m.beta * x)
    return m.varpi / m.beta * w**m.alpha / m.alpha * special.hyp2f1(m.alpha, m.lam, m.alpha + 1.0, w)


def levy_density(model: LevyModel, x):
    """Density of the Levy measure of the (negative) jumps, as a function of jump size."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa <= 0):
        raise ValueError("levy_density needs x > 0")
    if isinstance(model, BrownianDrift):
        out = np.zeros_like(xa)
    else:
        m = model
        out = m.varpi * np.exp(-m.alpha * m.beta * xa - m.lam * np.log(-np.expm1(-m.beta * xa)))
    return float(out) if np.ndim(out) == 0 else out


def truncated_moment(model: LevyModel, k: int, lo: float, hi: float = np.inf) -> float:
    """Integral of z**k nu(dz) over [lo, hi)."""
    if isinstance(model, BrownianDrift) or hi <= lo:
        return 0.0
    m = model
    f = lambda z: z**k * levy_density(m, z)
    total = 0.0
    if lo == 0.0:
        # near zero the density behaves like z**-lam; hand that factor to quad as a weight
        if k - m.lam <= -1.0:
            raise ValueError("moment diverges at the origin")
        top = min(hi, 1.0)
        g = lambda z: m.varpi * np.exp(-m.alpha * m.beta * z) * (m.beta * special.exprel(-m.beta * z)) ** -m.lam
        total, _ = integrate.quad(g, 0.0, top, weight="alg", wvar=(k - m.lam, 0.0), limit=200)
        lo = top
        if hi <= lo:
            return total
    part, _ = integrate.quad(f, lo, hi, limit=200, epsabs=0.0, epsrel=1e-12)
    return total + part


def variation_class(model: LevyModel) -> Variation:
    if isinstance(model, BrownianDrift) or model.sigma > 0 or model.lam > 2:
        return Variation(False)
    # with lam < 2 the small jumps are summable and the linear coefficient is the natural drift
    if model.delta_hat <= 0:
        raise InvalidModelError("bounded-variation model with nonpositive drift")
    return Variation(True, model.delta_hat)


def linear_coefficient(model: LevyModel) -> float:
    """gamma in the Levy-Khintchine form with the 1{z<1} compensator."""
    if isinstance(model, BrownianDrift):
        return model.mu_hat
    return mean_mu(model) + truncated_moment(model, 1, 1.0)


def poles(model: BetaFamily, n: int) -> np.ndarray:
    """Poles of the Beta term, reflected to the positive axis."""
    return model.beta * (model.alpha + np.arange(n, dtype=float))


def roots_at(model: BetaFamily, q: float, index) -> np.ndarray:
    """xi_k for the given 1-based bracket indices k, each found inside (eta_{k-1}, eta_k)."""
    index = np.asarray(index, dtype=float)
    hi = model.beta * (model.alpha + index - 1.0)
    lo = np.where(index > 1, hi - model.beta, 0.0)

    def g(xi):
        with np.errstate(divide="ignore", invalid="ignore"):
            return _psi(model, -xi) - q

    a, b = lo.copy(), hi.copy()
    for _ in range(200):
        mid = 0.5 * (a + b)
        done = (mid <= a) | (mid >= b)
        if np.all(done):
            break
        up = g(mid) > 0
        b = np.where(up & ~done, mid, b)
        a = np.where(~up & ~done, mid, a)
    xi = 0.5 * (a + b)
    # one Newton polish, kept inside the bracket
    step = g(xi) / -_psi(model, -xi, 1)
    polished = xi - step
    xi = np.where((polished > a) & (polished < b) & np.isfinite(polished), polished, xi)
    fa, fb = g(a), g(b)
    bad = ~(fb >= 0) | ~((fa <= 0) | (a == lo))
    if np.any(bad):
        raise RootNotFoundError(f"no sign change in bracket {int(index[np.argmax(bad)])}")
    return xi


def root_sequence(model: BetaFamily, q: float, n: int) -> RootSequence:
    """Negative roots -xi_k of psi = q, one per interval between consecutive poles."""
    if not isinstance(model, BetaFamily):
        raise TypeError("root_sequence needs a BetaFamily model")
    if q <= 0 or n < 1:
        raise ValueError("need q > 0 and n >= 1")
    xi = roots_at(model, q, np.arange(1, n + 1))
    return RootSequence(q, phi_q(model, q), xi, poles(model, n), n)
