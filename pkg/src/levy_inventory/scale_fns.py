"""q-scale functions and the fluctuation identities built from them.

Every supported model has a scale function of the form

    W(x) = c0 exp(Phi x) + sum_k a_k exp(-zeta_k x),    x >= 0,

with c0 = 1/psi'(Phi).  For the beta family the a_k are residues of
1/(psi - q) at its negative roots, plus a handful of quadrature nodes that
stand in for the truncated tail of the series.  Brownian motion with drift
has a single decaying term.

Integrals of W reduce to the entire functions phi_m(z) = sum_j z^j/(j+m)!
so that every companion (Wbar, Z, Zbar, Theta, ...) is a weighted sum of
x^m phi_m(-zeta_k x).  Identities that subtract two exponentially large
quantities are evaluated with the growing term cancelled analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from . import cost_model
from .errors import ConvergenceError, RootNotFoundError
from .levy_models import (
    BetaFamily,
    BrownianDrift,
    LevyModel,
    RootSequence,
    _psi,
    mean_mu,
    phi_q,
    root_sequence,
    roots_at,
    variation_class,
)

SATURATION = 40.0  # exp(-40) ~ 4e-18: terms past this are replaced by their asymptotes
TAIL_NODES = 40
PANEL_NODES = 8  # Gauss-Legendre nodes per octave of the sampled tail
FAR_INDEX = 1e6  # exact roots are sampled up to here
MIN_TERMS_FOR_TAIL = 16


def phi_funcs(m: int, z):
    """phi_m(z) = sum_j z**j / (j + m)!, with phi_0 = exp."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    zs = z[small]
    acc = np.zeros_like(zs)
    term = np.full_like(zs, 1.0 / factorial(m))
    for j in range(20):
        acc += term
        term = term * zs / (j + m + 1)
    out[small] = acc
    zl = z[~small]
    with np.errstate(over="ignore"):
        p = np.exp(zl)
    for j in range(1, m + 1):
        p = (p - 1.0 / factorial(j - 1)) / zl
    out[~small] = p
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class ScaleKernel:
    model: LevyModel
    q: float
    phi_q: float
    psi_prime_at_phi: float
    roots: RootSequence | None
    coefficients: np.ndarray  # B_i of the truncated series
    w_zero: float
    wprime_zero: float
    mu: float
    growth: float  # c0
    rates: np.ndarray  # zeta_k, increasing
    weights: np.ndarray  # a_k
    tail_exponent: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    # -- coefficient vectors of the decaying sums --------------------------------
    def coef(self, name: str) -> np.ndarray:
        if name not in self._cache:
            a, z, phi = self.weights, self.rates, self.phi_q
            self._cache[name] = {
                "a": a,
                "az": a * z,
                "theta": -a * (z + phi),
                "thetabar": a * (1.0 + phi / z),
            }[name]
        return self._cache[name]

    def _suffix(self, name: str, p: int) -> np.ndarray:
        key = (name, p)
        if key not in self._cache:
            c = self.coef(name) / self.rates**p
            self._cache[key] = np.concatenate([np.cumsum(c[::-1])[::-1], [0.0]])
        return self._cache[key]

    @property
    def thetabar_limit(self) -> float:
        if "tbinf" not in self._cache:
            self._cache["tbinf"] = self.growth - self.phi_q * float(np.sum(self.weights / self.rates))
        return self._cache["tbinf"]

    def esum(self, name: str, x, m: int) -> np.ndarray:
        """sum_k c_k x^m phi_m(-zeta_k x) for x >= 0 and c = coef(name)."""
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros_like(flat)
        c, zeta = self.coef(name), self.rates
        with np.errstate(divide="ignore", over="ignore"):
            active = np.searchsorted(zeta, SATURATION / flat, side="right")
        order = np.argsort(flat, kind="stable")
        for start in range(0, flat.size, 256):
            idx = order[start : start + 256]
            width = int(active[idx].max())
            if width:
                xx = flat[idx, None]
                vals = xx**m * phi_funcs(m, -zeta[:width] * xx)
                vals = np.where(np.arange(width) < active[idx, None], vals, 0.0)
                out[idx] = vals @ c[:width]
        # asymptote of x^m phi_m(-zeta x) once exp(-zeta x) has vanished
        for j in range(m):
            sign = (-1.0) ** (m + j + 1)
            out += sign * flat**j / factorial(j) * self._suffix(name, m - j)[active]
        return out.reshape(x.shape)

    def gsum(self, x, m: int):
        """c0 x^m phi_m(Phi x), the growing counterpart of esum."""
        x = np.asarray(x, dtype=float)
        return self.growth * x**m * phi_funcs(m, self.phi_q * x)

    # -- building blocks used across modules -------------------------------------
    def w(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        return np.where(x >= 0, self.gsum(xp, 0) + self.esum("a", xp, 0), 0.0)

    def decay(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.esum("a", np.maximum(x, 0.0), 0), 0.0)

    def thetabar_moment(self, length, m: int):
        """int_0^L Thetabar(u) (L - u)^m / m! du."""
        length = np.asarray(length, dtype=float)
        return (self.thetabar_limit * length ** (m + 1) / factorial(m + 1)
                + self.esum("thetabar", length, m + 1))

    def theta_moment(self, length, m: int):
        """int_0^L Theta(u) (L - u)^m / m! du."""
        return self.esum("theta", np.asarray(length, dtype=float), m + 1)


# ---------------------------------------------------------------------------
# construction


def _tail_sample(model: BetaFamily, q: float, t: np.ndarray):
    """Rates and coefficients at fractional indices t, interpolated between exact roots."""
    k0 = np.floor(t)
    xi = roots_at(model, q, np.concatenate([k0, k0 + 1.0]))
    c = -1.0 / _psi(model, -xi, 1)
    n = t.size
    w = t - k0
    rate = (1.0 - w) * xi[:n] + w * xi[n:]
    logc = np.log(np.abs(c))
    ratio = np.log(t / k0) / np.log1p(1.0 / k0)  # interpolate log|c| linearly in log k
    coef = np.sign(c[:n]) * np.exp(logc[:n] + ratio * (logc[n:] - logc[:n]))
    return rate, coef


def _tail_terms(model: BetaFamily, q: float, n_terms: int, far: float):
    """Rates, weights and fitted exponent of the exponential terms standing in for k > N."""
    start = n_terms + 0.5
    rates, weights = [], []
    if far > start:
        # sum_{k > N} c_k exp(-xi_k x) ~ int_{N+1/2}^far c(t) exp(-xi(t) x) dt, panels in log t
        edges = np.log(np.geomspace(start, far, int(np.ceil(np.log2(far / start))) + 1))
        gl_x, gl_w = leggauss(PANEL_NODES)
        half = 0.5 * np.diff(edges)
        u = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * gl_x[None, :]
        tm = np.exp(u.ravel())
        mid_rate, mid_coef = _tail_sample(model, q, tm)
        rates.append(mid_rate)
        weights.append(-mid_coef * tm * (half[:, None] * gl_w[None, :]).ravel())
    probe = np.unique(np.geomspace(max(far / 8.0, 1.0), far, 8).round())
    xi_p = roots_at(model, q, probe)
    c_p = -1.0 / _psi(model, -xi_p, 1)
    if not np.all(np.isfinite(c_p)) or any(not np.all(np.isfinite(w)) for w in weights):
        raise ConvergenceError("non-finite series coefficient")
    p, lc = np.polyfit(-np.log(probe), np.log(np.abs(c_p)), 1)
    if p <= 1.05:
        raise ConvergenceError(f"series coefficients decay too slowly (exponent {p:.3f} near index {far:.0e})")
    # past the far index the coefficients follow their power law; Gauss-Laguerre in log t
    r = p - 1.0
    nodes, wts = laggauss(TAIL_NODES)
    with np.errstate(over="ignore"):
        tf = far * np.exp(nodes / r)
    keep = tf < 1e100
    tf, wts = tf[keep], wts[keep]
    rates.append(xi_p[-1] + model.beta * (tf - far))
    weights.append(-np.sign(c_p[-1]) * np.exp(lc) * far ** (1.0 - p) * wts[keep[keep]] / r)
    return np.concatenate(rates), np.concatenate(weights), p


def _beta_series(model: BetaFamily, q: float, n_terms: int, tail: bool):
    rs = root_sequence(model, q, n_terms)
    xi = rs.xis
    coeffs = -1.0 / _psi(model, -xi, 1)
    rates, weights = xi.copy(), -coeffs
    exponent = None
    if tail and n_terms >= MIN_TERMS_FOR_TAIL:
        # exact roots are sampled as far out as they stay resolvable in double precision
        fars = sorted({max(FAR_INDEX, 16.0 * n_terms), 1e5, 1e4, 16.0 * n_terms}, reverse=True)
        fars = [f for f in fars if f >= 16.0 * n_terms] + [float(n_terms)]
        failure = None
        for far in fars:
            try:
                with np.errstate(invalid="ignore", divide="ignore"):
                    t_rates, t_weights, exponent = _tail_terms(model, q, n_terms, far)
                break
            except (ConvergenceError, RootNotFoundError) as exc:
                failure = exc
        else:
            raise failure
        rates = np.concatenate([rates, t_rates])
        weights = np.concatenate([weights, t_weights])
    order = np.argsort(rates, kind="stable")
    return rs, coeffs, rates[order], weights[order], exponent


def build_kernel(model: LevyModel, q: float, n_terms: int = 1000, tail: bool = True) -> ScaleKernel:
    """Assemble the exponential-sum representation of W at discount rate q."""
    if q <= 0:
        raise ValueError("q must be positive")
    phi = phi_q(model, q)
    dpsi = float(_psi(model, phi, 1))
    c0 = 1.0 / dpsi
    mu = mean_mu(model)
    var = variation_class(model)
    if isinstance(model, BrownianDrift):
        s2 = model.sigma**2
        zeta = (model.mu_hat + np.sqrt(model.mu_hat**2 + 2.0 * q * s2)) / s2
        rs, coeffs = None, np.array([c0])
        rates, weights, exponent = np.array([zeta]), np.array([-c0]), None
    else:
        rs, coeffs, rates, weights, exponent = _beta_series(model, q, n_terms, tail)
        if not np.isfinite(weights).all():
            raise ConvergenceError("non-finite series coefficient")
    w0 = c0 + float(np.sum(weights))
    if var.bounded:
        wp0 = np.inf  # infinite jump activity
    elif model.sigma > 0:
        wp0 = 2.0 / model.sigma**2
    else:
        wp0 = np.inf
    return ScaleKernel(model, q, phi, dpsi, rs, coeffs, w0, wp0, mu, c0, rates, weights, exponent)


# ---------------------------------------------------------------------------
# evaluation


KINDS = ("W", "Wprime", "Wbar", "Z", "Zbar", "Wphi", "Theta", "ThetaBar")


def eval_kernel(k: ScaleKernel, kind: str, x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ValueError("NaN argument")
    xp = np.maximum(x, 0.0)
    neg = x < 0
    if kind == "W":
        out = k.gsum(xp, 0) + k.esum("a", xp, 0)
    elif kind == "Wprime":
        out = k.phi_q * k.gsum(xp, 0) - k.esum("az", xp, 0)
    elif kind == "Wbar":
        out = k.gsum(xp, 1) + k.esum("a", xp, 1)
    elif kind == "Z":
        out = 1.0 + k.q * (k.gsum(xp, 1) + k.esum("a", xp, 1))
    elif kind == "Zbar":
        out = xp + k.q * (k.gsum(xp, 2) + k.esum("a", xp, 2))
    elif kind == "Wphi":
        out = k.growth + np.exp(-k.phi_q * xp) * k.esum("a", xp, 0)
    elif kind == "Theta":
        out = k.esum("theta", xp, 0)
    elif kind == "ThetaBar":
        out = k.thetabar_limit + k.esum("thetabar", xp, 0)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    below = {"Z": 1.0, "Zbar": x}.get(kind, 0.0)
    out = np.where(neg, below, out)
    return float(out) if out.ndim == 0 else out


def laplace_transform(k: ScaleKernel, s: float) -> float:
    """int_0^inf exp(-s x) W(x) dx by adaptive quadrature."""
    if not s > k.phi_q:
        raise ValueError("need s > Phi(q)")
    gap = s - k.phi_q
    reach = (SATURATION + np.log1p(k.growth / gap)) / gap
    f = lambda x: k.growth * np.exp(-gap * x) + float(k.esum("a", np.array([x]), 0)[0]) * np.exp(-s * x)
    cuts = np.concatenate([[0.0], np.geomspace(1e-8, reach, 12)])
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, err = integrate.quad(f, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-11)
        if not np.isfinite(val) or err > 1e-8 * (1.0 + abs(val)):
            raise ConvergenceError("Laplace-transform quadrature did not converge")
        total += val
    return total


def laplace_check(k: ScaleKernel, s: float) -> float:
    """(psi(s) - q) times the Laplace transform of W; equals one for an exact W."""
    return float((_psi(k.model, s) - k.q) * laplace_transform(k, s))


# ---------------------------------------------------------------------------
# fluctuation identities


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def exit_up_lt(k: ScaleKernel, x, b: float):
    """E_x[exp(-q tau_b+); tau_b+ < tau_0-] = W(x)/W(b)."""
    x = np.asarray(x, dtype=float)
    if b <= 0:
        raise ValueError("need b > 0")
    if np.any(x > b):
        raise ValueError("need x <= b")
    xp = np.maximum(x, 0.0)
    ratio = eval_kernel(k, "Wphi", xp) / eval_kernel(k, "Wphi", b) * np.exp(-k.phi_q * (b - xp))
    return _scalar(np.where(x < 0, 0.0, np.where(x == b, 1.0, ratio)))


def ruin_lt(k: ScaleKernel, x):
    """E_x[exp(-q tau_0-)] = 1 - (q/Phi) Thetabar(x)."""
    x = np.asarray(x, dtype=float)
    return _scalar(np.where(x < 0, 1.0, 1.0 - k.q / k.phi_q * eval_kernel(k, "ThetaBar", x)))


def overshoot_expectation(k: ScaleKernel, x, s):
    """E_x[exp(-q tau_s-) X(tau_s-)]."""
    x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
    q, phi, c0 = k.q, k.phi_q, k.growth
    L = np.maximum(x - s, 0.0)
    # Zbar(L) - (q/Phi^2) W(L) with the exp(Phi L) parts cancelled
    core = L - q * c0 * (1.0 + phi * L) / phi**2 + q * k.esum("a", L, 2) - q / phi**2 * k.esum("a", L, 0)
    val = core - (s - k.mu / q) * (q / phi) * eval_kernel(k, "ThetaBar", L) + s
    return _scalar(np.where(x < s, x, val))


def resolvent_cost(k: ScaleKernel, x, s, h):
    """E_x[int_0^{tau_s-} exp(-q t) h(X_t) dt] = W(x-s) Psi(s;h) - phi_s(x;h)."""
    h = cost_model.as_integrand(h)
    x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
    L = np.maximum(x - s, 0.0)
    ps = cost_model.psi_of(h, k.phi_q, s)
    px = cost_model.psi_of(h, k.phi_q, np.maximum(x, s))
    val = k.esum("a", L, 0) * ps + k.growth * px - cost_model.conv_decay(k, h, s, np.maximum(x, s))
    return _scalar(np.where(x < s, 0.0, val))


def reflected_local_time_lt(k: ScaleKernel, x, s):
    """E_x[int exp(-q t) dL_t] for the process reflected at s: Z(x-s)/Phi - Zbar(x-s) - mu/q."""
    x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
    q, phi, c0 = k.q, k.phi_q, k.growth
    L = np.maximum(x - s, 0.0)
    val = 1.0 / phi + q * c0 * L / phi + q * k.esum("a", L, 1) / phi - L - q * k.esum("a", L, 2)
    below = 1.0 / phi - (x - s)
    return _scalar(np.where(x < s, below, val) - k.mu / q)


def reflected_running_cost(k: ScaleKernel, x, s, h):
    """E_x[int exp(-q t) h(U_t) dt] for the process reflected at s."""
    h = cost_model.as_integrand(h)
    x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
    q, phi, c0 = k.q, k.phi_q, k.growth
    L = np.maximum(x - s, 0.0)
    xs = np.maximum(x, s)
    ps = cost_model.psi_of(h, phi, s)
    val = (phi / q - c0 + phi * k.esum("a", L, 1)) * ps + c0 * cost_model.psi_of(h, phi, xs) \
        - cost_model.conv_decay(k, h, s, xs)
    return _scalar(np.where(x < s, phi / q * ps, val))
