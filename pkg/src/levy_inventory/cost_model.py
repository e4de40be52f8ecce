"""Inventory costs and the two integral transforms built on them.

For a running cost h the solver needs

    Psi(s; h) = int_0^inf exp(-Phi y) h(y + s) dy
    phi_s(x; h) = int_s^x W(x - y) h(y) dy

Polynomial costs get closed forms through Taylor expansion at s; any
other cost falls back on adaptive quadrature split at its kinks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

from .errors import BracketError, ConvergenceError, KinkError, SpecError

if TYPE_CHECKING:
    from .scale_fns import ScaleKernel


@dataclass(frozen=True)
class Quadratic:
    """f(x) = x**2."""

    @property
    def poly(self) -> Polynomial:
        return Polynomial([0.0, 0.0, 1.0])

    kinks: tuple = ()


@dataclass(frozen=True)
class PiecewiseC1:
    """User-supplied cost with declared shape constants.

    ``a`` is the turning point of the tilted cost, and ``c0``/``x0`` the
    witnesses for its eventual slope bound; all three are checked against
    the tilted derivative when a ``CostSpec`` is built.
    """

    f: Callable[[float], float]
    fprime: Callable[[float], float]
    a: float
    c0: float
    x0: float
    degree: int = 2
    kinks: tuple = ()
    poly: Polynomial | None = None


CostFunction = Union[Quadratic, PiecewiseC1]


@dataclass(frozen=True)
class Integrand:
    """A running cost in the form the transforms consume."""

    func: Callable
    poly: Polynomial | None = None
    kinks: tuple = ()
    degree: int = 2

    def __call__(self, x):
        if self.poly is not None:
            return self.poly(np.asarray(x, dtype=float))
        return np.vectorize(self.func, otypes=[float])(x)

    def taylor(self, s):
        """Derivatives h^(m)(s) for m = 0..deg (polynomial integrands only)."""
        p = self.poly
        return [p.deriv(m)(s) if m else p(s) for m in range(p.degree() + 1)]


def as_integrand(h) -> Integrand:
    if isinstance(h, Integrand):
        return h
    if isinstance(h, Polynomial):
        return Integrand(h, h)
    if isinstance(h, Quadratic):
        return Integrand(h.poly, h.poly)
    if isinstance(h, PiecewiseC1):
        if h.poly is not None:
            return Integrand(h.poly, h.poly)
        return Integrand(h.f, None, tuple(h.kinks), h.degree)
    if isinstance(h, (int, float)):
        p = Polynomial([float(h)])
        return Integrand(p, p)
    if callable(h):
        return Integrand(h, None)
    raise TypeError(f"cannot use {type(h).__name__} as a running cost")


@dataclass(frozen=True)
class CostSpec:
    C: float
    K: float
    q: float
    f: CostFunction = field(default_factory=Quadratic)
    validate: bool = True

    def __post_init__(self):
        if self.C < 0 or self.K < 0 or self.q <= 0:
            raise SpecError("need C >= 0, K >= 0, q > 0")
        if self.validate and isinstance(self.f, PiecewiseC1):
            _validate_shape(self)

    @property
    def turning_point(self) -> float:
        if isinstance(self.f, Quadratic):
            return -self.C * self.q / 2.0
        return self.f.a

    def integrand(self, which: str) -> Integrand:
        cq = self.C * self.q
        f = self.f
        if f.__class__ is Quadratic or getattr(f, "poly", None) is not None:
            p = f.poly
            polys = {
                "f": p,
                "f_tilde": p + Polynomial([0.0, cq]),
                "f_prime": p.deriv(),
                "f_tilde_prime": p.deriv() + cq,
            }
            return Integrand(polys[which], polys[which])
        funcs = {
            "f": f.f,
            "f_tilde": lambda x: f.f(x) + cq * x,
            "f_prime": f.fprime,
            "f_tilde_prime": lambda x: f.fprime(x) + cq,
        }
        deg = f.degree - 1 if which.endswith("prime") else f.degree
        return Integrand(funcs[which], None, tuple(f.kinks), deg)


def _validate_shape(spec: CostSpec) -> None:
    f = spec.f
    if abs(f.f(0.0)) > 1e-12:
        raise SpecError("cost must vanish at zero")
    d = spec.integrand("f_tilde_prime")
    a = f.a
    offsets = np.geomspace(1e-3, 1e3, 200)
    kinks = np.asarray(f.kinks, dtype=float)
    keep = lambda xs: xs[np.all(np.abs(xs[:, None] - kinks[None, :]) > 1e-9, axis=1)] if kinks.size else xs
    left = keep(a - offsets[::-1])
    right = keep(a + offsets)
    dl, dr = d(left), d(right)
    if np.any(dl > 1e-12) or np.any(dr < -1e-12):
        raise SpecError("tilted cost is not decreasing left of a and increasing right of it")
    if np.any(np.diff(dl) < -1e-9 * (1 + np.abs(dl[1:]))):
        raise SpecError("tilted cost is not convex left of a")
    if f.x0 < a or f.c0 <= 0:
        raise SpecError("need c0 > 0 and x0 >= a")
    tail = right[right >= f.x0]
    if np.any(d(tail) < f.c0):
        raise SpecError("tilted slope falls below c0 beyond x0")


def f_tilde(spec: CostSpec, x, order: int = 0):
    """Tilted cost f(x) + C q x (order 0) or its derivative (order 1)."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if order == 1 and np.any(np.isin(np.asarray(x, dtype=float), spec.f.kinks)):
        raise KinkError("derivative requested at a kink")
    h = spec.integrand("f_tilde_prime" if order else "f_tilde")
    out = h(x)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Psi transform


def psi_of(h, phi: float, s):
    """Psi(s; h) for an integrand h and exponential rate phi."""
    h = as_integrand(h)
    s = np.asarray(s, dtype=float)
    if h.poly is not None:
        derivs = h.taylor(s)
        out = sum(dm / phi ** (m + 1) for m, dm in enumerate(derivs))
        return out + 0.0 * s
    out = np.vectorize(lambda y: _psi_quad(h, phi, y), otypes=[float])(s)
    return float(out) if out.ndim == 0 else out


def _psi_quad(h: Integrand, phi: float, s: float) -> float:
    reach = (40.0 + h.degree * np.log1p(abs(s) + 40.0 / phi)) / phi
    cuts = sorted({0.0, reach, *[k - s for k in h.kinks if 0.0 < k - s < reach]})
    g = lambda y: np.exp(-phi * y) * h.func(y + s)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, err = integrate.quad(g, lo, hi, limit=200, epsabs=1e-15, epsrel=1e-12)
        if not np.isfinite(val) or err > 1e-8 * (1.0 + abs(val)):
            raise ConvergenceError("Psi quadrature did not converge")
        total += val
    tail, _ = integrate.quad(g, reach, np.inf, limit=200)
    return total + tail


def psi_transform(spec: CostSpec, kernel_phi_q: float, s, which: str = "f_tilde"):
    return psi_of(spec.integrand(which), kernel_phi_q, s)


# ---------------------------------------------------------------------------
# convolution with the scale function


def kappa(n: int, t: float, t_prime: float, zeta: float) -> float:
    """int_t^t' exp(zeta y) y**n dy in closed form."""
    from .scale_fns import phi_funcs

    if n not in (0, 1, 2):
        raise ValueError("n must be 0, 1 or 2")
    if not t_prime > t:
        raise ValueError("need t_prime > t")
    length = t_prime - t
    derivs = [t**n, n * t ** max(n - 1, 0), n * (n - 1) * t ** max(n - 2, 0)][: n + 1]
    # int_t^t' e^{zeta y} h(y) dy = e^{zeta t'} sum_m h^(m)(t) L^{m+1} phi_{m+1}(-zeta L)
    acc = sum(d * length ** (m + 1) * phi_funcs(m + 1, -zeta * length) for m, d in enumerate(derivs))
    return float(np.exp(zeta * t_prime) * acc)


def conv_decay(k: "ScaleKernel", h, s, x):
    """int_s^x D(x - y) h(y) dy, with D the decaying part of W."""
    h = as_integrand(h)
    s, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    length = np.maximum(x - s, 0.0)
    if h.poly is not None:
        derivs = h.taylor(s)
        out = sum(dm * k.esum("a", length, m + 1) for m, dm in enumerate(derivs))
        return np.where(x > s, out, 0.0) + 0.0 * length
    out = np.vectorize(lambda ss, xx: _conv_quad(k, h, ss, xx, growing=False), otypes=[float])(s, x)
    return out


def conv_full(k: "ScaleKernel", h, s, x):
    """phi_s(x; h) = int_s^x W(x - y) h(y) dy."""
    h = as_integrand(h)
    s, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    length = np.maximum(x - s, 0.0)
    if h.poly is not None:
        derivs = h.taylor(s)
        out = sum(dm * k.gsum(length, m + 1) for m, dm in enumerate(derivs)) + conv_decay(k, h, s, x)
        return np.where(x > s, out, 0.0)
    out = np.vectorize(lambda ss, xx: _conv_quad(k, h, ss, xx, growing=True), otypes=[float])(s, x)
    return out


def _conv_quad(k: "ScaleKernel", h: Integrand, s: float, x: float, growing: bool) -> float:
    if x <= s:
        return 0.0
    fn = k.w if growing else k.decay
    g = lambda y: float(fn(x - y)) * h.func(y)
    pts = [p for p in h.kinks if s < p < x]
    val, err = integrate.quad(g, s, x, points=pts or None, limit=400, epsabs=1e-14, epsrel=1e-11)
    if not np.isfinite(val) or err > 1e-7 * (1.0 + abs(val)):
        raise ConvergenceError("convolution quadrature did not converge")
    return val


def phi_convolution(k: "ScaleKernel", spec: CostSpec, s, x, which: str = "f_tilde"):
    out = conv_full(k, spec.integrand(which), s, x)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------


def a0_root(spec: CostSpec, phi_q: float) -> float:
    """Unique zero of Psi(.; f_tilde')."""
    if isinstance(spec.f, Quadratic):
        return -spec.C * spec.q / 2.0 - 1.0 / phi_q
    h = spec.integrand("f_tilde_prime")
    g = lambda y: float(psi_of(h, phi_q, y))
    hi = spec.turning_point
    if g(hi) <= 0:
        raise BracketError("Psi(.; f_tilde') is not positive at the turning point")
    step = 1.0
    lo = hi - step
    for _ in range(60):
        if g(lo) < 0:
            break
        hi, step = lo, 2.0 * step
        lo = hi - step
    else:
        raise BracketError("Psi(.; f_tilde') never changes sign")
    return optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15)


def taylor_at(h: Integrand, phi: float, s):
    """Psi^(m)(s; h) for m = 0..deg, i.e. Psi of the successive derivatives."""
    p = h.poly
    return [psi_of(Integrand(p.deriv(m), p.deriv(m)), phi, s) for m in range(p.degree() + 1)]

