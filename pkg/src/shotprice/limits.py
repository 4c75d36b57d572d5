"""Analytic limit laws and quadrature oracles.

Two families of limits arise from the scaled shot-noise process: a
fractional Brownian motion (variance parameter from a double integral of
the squared pulse increment against u^(1-delta)) and a skewed stable
Levy motion (scale and skewness from the rate-law tail constants).  This
module computes those parameters, evaluates the exact finite-intensity
characteristic functions by quadrature, and provides a reference stable
sampler for estimator validation.

All double integrals exploit that the scaled increment is piecewise
affine in the arrival time s: the inner s-integral has a closed form on
each piece, and only the outer duration integral is done adaptively
(split at the u-values where the piece structure changes).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError, NumericalError
from .measures import (DurationLaw, ParetoDuration, PowerLawInfinite, RateLaw,
                       discrete_atoms, rate_moments)
from .pulses import Pulse, duration_kinks, increment_value_pieces


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 400

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ConfigurationError("quadrature tolerances must be positive")


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class LimitingMeasure:
    """The untruncated measure u^(-delta-1) du on (0, inf).

    Usable only inside quadrature oracles (it has infinite mass near 0 and
    cannot be sampled); stands for the limit of the scaled duration laws.
    """

    delta: float

    def __post_init__(self):
        if not self.delta > 1.0:
            raise ConfigurationError("limiting measure requires delta > 1")


def _check_error(value_scale: float, err: float, settings: QuadratureSettings, what: str):
    budget = max(settings.abs_tol, settings.rel_tol * value_scale) * 50.0
    if err > budget:
        raise NumericalError(
            f"{what}: quadrature error {err:.3g} exceeds budget {budget:.3g}")


@dataclass(frozen=True)
class _PowerSegment:
    """Internal: u^(-delta-1) du restricted to (lo, hi), lo may be 0."""

    delta: float
    lo: float
    hi: float


def _measure_support(measure):
    """(lo, hi, log-space weight) of the duration measure.

    The weight is density(e^y) * e^y, the du/dy factor included, computed
    as an explicit exponential so extreme y never overflow intermediate
    powers of u.
    """
    if isinstance(measure, ParetoDuration):
        d, b = measure.delta, measure.b
        coef = d * b ** d
        return b, np.inf, (lambda y: coef * math.exp(-d * y))
    if isinstance(measure, (PowerLawInfinite, LimitingMeasure, _PowerSegment)):
        d = measure.delta
        if isinstance(measure, PowerLawInfinite):
            lo, hi = measure.u_min, measure.u_max
        elif isinstance(measure, _PowerSegment):
            lo, hi = measure.lo, measure.hi
        else:
            lo, hi = 0.0, np.inf
        return lo, hi, (lambda y: math.exp(-d * y))
    raise ConfigurationError(f"unsupported duration measure {measure!r}")


def _log_segments(lo: float, hi: float, kinks, t: float):
    """Integration segments in y = log u with interior break points.

    All duration integrands here behave like powers of u near 0 and
    infinity, so in log space they decay exponentially toward both ends;
    the unbounded segments are left to the adaptive integrator while the
    kink points are confined to one finite middle segment.
    """
    scale = max(t, 1e-9)
    mid_u = max([10.0 * scale] + [2.0 * k for k in kinks])
    if lo > 0.0:
        mid_u = max(mid_u, 4.0 * lo)
    if np.isfinite(hi):
        mid_u = min(mid_u, hi)
    y_mid = math.log(mid_u)
    segments = []
    if lo > 0.0:
        y_lo = min(math.log(lo), y_mid)
    else:
        y_lo = min(math.log(min([scale] + list(kinks)) * 1e-3), y_mid)
        segments.append((-np.inf, y_lo, ()))
    pts = tuple(math.log(k) for k in kinks if y_lo < math.log(k) < y_mid)
    if y_mid > y_lo:
        segments.append((y_lo, y_mid, pts))
    y_hi = math.log(hi) if np.isfinite(hi) else np.inf
    if y_hi > y_mid:
        segments.append((y_mid, y_hi, ()))
    return segments


def _integrate_duration(f_of_u, measure, t: float, pulse: Pulse,
                        settings: QuadratureSettings, what: str, zero=0.0):
    """int f(u) dnu(u) over the duration measure, in log-u space.

    ``zero`` fixes the output shape (scalar or complex vector) and is
    returned verbatim beyond |log u| = 200, where the weighted integrand
    is far below any tolerance but naive powers of u would overflow.
    """
    vector = np.ndim(zero) > 0
    lo, hi, weight = _measure_support(measure)
    segments = _log_segments(lo, hi, duration_kinks(pulse, t), t)

    def g(y):
        if abs(y) > 200.0:
            return zero
        return f_of_u(math.exp(y)) * weight(y)

    total, err = None, 0.0
    for y_a, y_b, pts in segments:
        if vector:
            v, e = integrate.quad_vec(g, y_a, y_b, points=pts or None,
                                      epsabs=settings.abs_tol, epsrel=settings.rel_tol,
                                      norm="max")
        else:
            v, e = integrate.quad(g, y_a, y_b, points=pts or None,
                                  epsabs=settings.abs_tol, epsrel=settings.rel_tol,
                                  limit=settings.max_subdivisions)
        total = v if total is None else total + v
        err += e
    scale = float(np.max(np.abs(total))) if vector else abs(total)
    _check_error(scale, err, settings, what)
    return total


def _piece_square_integral(pieces) -> float:
    """sum over (h, v0, v1) pieces of the integral of the squared value.

    The division-free form h (v0^2 + v0 v1 + v1^2)/3 stays exact as a
    piece degenerates to a constant.
    """
    total = 0.0
    for h, v0, v1 in pieces:
        if h <= 0.0:
            continue
        total += h * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0
    return total


def _piece_abs_power_integral(pieces, p: float) -> float:
    """sum over (h, v0, v1) pieces of the integral of |value|^p."""
    total = 0.0
    q = p + 1.0
    for h, v0, v1 in pieces:
        if h <= 0.0:
            continue
        if abs(v1 - v0) <= 1e-9 * max(abs(v0), abs(v1)):
            # nearly flat piece: antiderivative difference would cancel
            total += abs(0.5 * (v0 + v1)) ** p * h
        else:
            anti = (math.copysign(abs(v1) ** q, v1) - math.copysign(abs(v0) ** q, v0))
            total += h * anti / (q * (v1 - v0))
    return total


def _sinc(z):
    """sin(z)/z, elementwise-safe near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    out = np.where(small, 1.0 - z * z / 6.0, np.sin(safe) / safe)
    return out


def squared_increment_integral(pulse: Pulse, t: float, u: float) -> float:
    """int over s of (u * increment(t, s, u))^2 ds, exact."""
    if u <= 0.0:
        return 0.0
    return _piece_square_integral(increment_value_pieces(pulse, t, u))


def mean_increment_integral(pulse: Pulse, t: float, u: float) -> float:
    """int over s of u * increment(t, s, u) ds = u * t * f(1), exact.

    The shift identity int [g(s + h) - g(s)] ds = h * (g(inf) - g(-inf))
    applied to g = f gives the closed form for every pulse kind.
    """
    return u * t * pulse.plateau_value


def second_moment_integral(pulse: Pulse, measure, t: float,
                           settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """int int (u*increment)^2 ds dnu(u) against the duration measure."""
    if t == 0.0:
        return 0.0
    return _integrate_duration(lambda u: squared_increment_integral(pulse, t, u),
                               measure, t, pulse, settings, "second_moment_integral")


def partial_second_moment(pulse: Pulse, delta: float, t: float, u_lo: float,
                          u_hi: float,
                          settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """int int (u*increment)^2 ds u^(-delta-1) du restricted to (u_lo, u_hi)."""
    if t == 0.0 or u_hi <= u_lo:
        return 0.0
    return second_moment_integral(pulse, _PowerSegment(delta, u_lo, u_hi), t, settings)


def fbm_variance(pulse: Pulse, delta: float, lam: float, er2: float,
                 settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Variance parameter of the fBm limit at unit time.

    sigma^2 = lam * E R^2 * int int [f((1-s)/u) - f(-s/u)]^2 u^(1-delta) du ds,
    evaluated with the exact inner s-integral and adaptive outer quadrature.
    Plateau pulses with f(1) != 0 need delta < 2 for finiteness; compact
    pulses extend to delta < 3.
    """
    hurst(delta)  # validates delta in (1, 3)
    if pulse.plateau_value != 0.0 and delta >= 2.0:
        raise DomainError("plateau pulses require delta in (1, 2) for a finite variance")
    if lam < 0.0 or er2 < 0.0:
        raise DomainError("lam and er2 must be >= 0")
    if lam == 0.0 or er2 == 0.0:
        return 0.0
    return lam * er2 * second_moment_integral(pulse, LimitingMeasure(delta), 1.0, settings)


def hurst(delta: float) -> float:
    """Hurst parameter H = (3 - delta)/2 of the fBm limit."""
    if not 1.0 < delta < 3.0:
        raise DomainError("delta must lie in (1, 3) so that H is in (0, 1)")
    return (3.0 - delta) / 2.0


@dataclass(frozen=True)
class FbmModel:
    """Fractional Brownian motion parameters (variance at t=1 and Hurst index)."""

    sigma2: float
    hurst: float

    def __post_init__(self):
        if not self.sigma2 > 0.0:
            raise ConfigurationError("sigma2 must be positive")
        if not 0.0 < self.hurst < 1.0:
            raise ConfigurationError("Hurst parameter must lie in (0, 1)")


def fbm_model(pulse: Pulse, delta: float, lam: float, er2: float,
              settings: QuadratureSettings = DEFAULT_SETTINGS) -> FbmModel:
    return FbmModel(fbm_variance(pulse, delta, lam, er2, settings), hurst(delta))


def fbm_covariance(model: FbmModel, t1: float, t2: float) -> float:
    """Cov(Z(t1), Z(t2)) = sigma^2/2 (t1^2H + t2^2H - |t1-t2|^2H)."""
    if t1 < 0.0 or t2 < 0.0:
        raise DomainError("times must be >= 0")
    h2 = 2.0 * model.hurst
    return 0.5 * model.sigma2 * (t1 ** h2 + t2 ** h2 - abs(t1 - t2) ** h2)


def stable_scale(delta: float) -> float:
    """Scale of the unit stable building block.

    sigma = [-2 Gamma(2 - delta) cos(pi delta / 2) / (delta (delta - 1))]^(1/delta);
    the cosine is negative on (1, 2) so the bracket is positive.
    """
    if not 1.0 < delta < 2.0:
        raise DomainError("stability index delta must lie in (1, 2)")
    bracket = -2.0 * math.gamma(2.0 - delta) * math.cos(math.pi * delta / 2.0) \
        / (delta * (delta - 1.0))
    if not bracket > 0.0:
        raise NumericalError(f"stable scale bracket not positive: {bracket!r}")
    return bracket ** (1.0 / delta)


@dataclass(frozen=True)
class StableModel:
    """Parameters of the stable Levy limit.

    ``total_scale`` is the scale of the aggregated motion,
    sigma * (lam * (c1 + c2))^(1/delta); ``beta`` its skewness.
    """

    delta: float
    base_scale: float
    c1: float
    c2: float
    lam: float
    beta: float
    total_scale: float

    def __post_init__(self):
        if self.c1 < 0.0 or self.c2 < 0.0 or not self.c1 + self.c2 > 0.0:
            raise ConfigurationError("need c1, c2 >= 0 with c1 + c2 > 0")
        if not -1.0 <= self.beta <= 1.0:
            raise ConfigurationError("skewness beta must lie in [-1, 1]")


def stable_model(delta: float, lam: float, rate_law: RateLaw) -> StableModel:
    """Stable limit parameters from the rate-law tail constants."""
    if not lam > 0.0:
        raise ConfigurationError("arrival rate lambda must be positive")
    m = rate_moments(rate_law, delta)
    if m.c1 + m.c2 <= 0.0:
        raise ConfigurationError("rate law is degenerate at zero (c1 + c2 = 0)")
    beta = (m.c1 - m.c2) / (m.c1 + m.c2)
    base = stable_scale(delta)
    total = base * (lam * (m.c1 + m.c2)) ** (1.0 / delta)
    return StableModel(delta, base, m.c1, m.c2, lam, beta, total)


def stable_char_function(model: StableModel, t: float, xi):
    """E exp(i xi L(t)) = exp{-t s^d |xi|^d [1 - i beta sign(xi) tan(pi d/2)]}."""
    if t < 0.0:
        raise DomainError("time must be >= 0")
    xi = np.asarray(xi, dtype=float)
    d = model.delta
    mag = model.total_scale ** d * np.abs(xi) ** d
    phase = model.beta * np.sign(xi) * math.tan(math.pi * d / 2.0)
    out = np.exp(-t * mag * (1.0 - 1j * phase))
    return out if out.ndim else complex(out)


def sample_stable(model: StableModel, t: float, rng: np.random.Generator, size=None):
    """Reference sampler for the stable limit at time t.

    Uses the standard one-line transformation (angle V uniform on
    (-pi/2, pi/2), then W exponential) producing the parameterization of
    :func:`stable_char_function` exactly; the sample is
    total_scale * t^(1/delta) * S(delta, beta).  At delta = 2 this reduces
    to a centered Gaussian.
    """
    d, beta = model.delta, model.beta
    if not 1.0 < d <= 2.0:
        raise DomainError("sampler supports delta in (1, 2]")
    v = (rng.random(size) - 0.5) * math.pi
    w = rng.exponential(1.0, size)
    if d == 2.0:
        x = 2.0 * np.sin(v) * np.sqrt(w)
    else:
        zeta = beta * math.tan(math.pi * d / 2.0)
        b0 = math.atan(zeta) / d
        s0 = (1.0 + zeta * zeta) ** (0.5 / d)
        x = (s0 * np.sin(d * (v + b0)) / np.cos(v) ** (1.0 / d)
             * (np.cos(v - d * (v + b0)) / w) ** ((1.0 - d) / d))
    return model.total_scale * t ** (1.0 / d) * x


def prelimit_char_function(pulse: Pulse, lambda_n: float, duration_law,
                           rate_law: RateLaw, rate_multiplier: float, t: float, xi,
                           settings: QuadratureSettings = DEFAULT_SETTINGS,
                           compensated: bool | None = None):
    """Exact characteristic function of the shot-noise value at time t.

    The rate law must be discrete so the rate integral is a finite sum.
    For probability duration laws the raw (uncentered) form applies by
    default; infinite measures force the compensated form
    exp int {e^(i xi x) - 1 - i xi x} dmu.  Passing ``compensated=True``
    with a probability law yields the characteristic function of the
    centered value Z(t) - E Z(t).

    Serves as the finite-intensity oracle against empirical
    characteristic functions; with :class:`LimitingMeasure` it evaluates
    the limiting law of the intermediate regime.
    """
    atoms = discrete_atoms(rate_law)
    if atoms is None:
        raise ConfigurationError("prelimit_char_function requires a discrete rate law")
    if t < 0.0:
        raise DomainError("time must be >= 0")
    infinite = isinstance(duration_law, (PowerLawInfinite, LimitingMeasure))
    if compensated is None:
        compensated = infinite
    if infinite and not compensated:
        raise ConfigurationError("infinite duration measures require the compensated form")

    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if t == 0.0 or lambda_n == 0.0:
        out = np.ones(len(xi_arr), dtype=complex)
        return out if np.ndim(xi) else complex(out[0])

    thetas = np.array([xi_arr * rate_multiplier * v for v, _ in atoms])  # (K, J)
    weights = np.array([p for _, p in atoms])
    f1 = pulse.plateau_value

    def integrand(u):
        pieces = increment_value_pieces(pulse, t, u)
        acc = np.zeros(thetas.shape, dtype=complex)
        hsum = 0.0
        for h, v0, v1 in pieces:
            if h <= 0.0:
                continue
            z = thetas * (0.5 * (v1 - v0))
            acc += h * np.exp(1j * thetas * (0.5 * (v0 + v1))) * _sinc(z)
            hsum += h
        # the integral of -1 over the support [-u, t]; using the summed piece
        # lengths keeps the xi = 0 value exactly zero
        acc -= hsum
        if compensated:
            acc -= 1j * thetas * (u * t * f1)
        return weights @ acc

    total = _integrate_duration(integrand, duration_law, t, pulse, settings,
                                "prelimit_char_function",
                                zero=np.zeros(len(xi_arr), dtype=complex))
    out = np.exp(lambda_n * total)
    return out if np.ndim(xi) else complex(out[0])


def prelimit_variance(pulse: Pulse, lambda_n: float, duration_law, rate_sq: float,
                      rate_multiplier: float, t: float,
                      settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Exact variance of the (centered or compensated) value at time t."""
    a2 = rate_multiplier * rate_multiplier
    return a2 * lambda_n * rate_sq * second_moment_integral(pulse, duration_law, t, settings)


def lemma1_integral(pulse: Pulse, kappa: float, delta: float, t: float,
                    settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """int int (u |increment|)^(1+kappa) u^(-delta-1) du ds by quadrature."""
    _check_lemma1_hypotheses(kappa, delta)
    if t < 0.0:
        raise DomainError("time must be >= 0")
    if t == 0.0:
        return 0.0
    p = 1.0 + kappa
    return _integrate_duration(
        lambda u: _piece_abs_power_integral(increment_value_pieces(pulse, t, u), p),
        LimitingMeasure(delta), t, pulse, settings, "lemma1_integral")


def _check_lemma1_hypotheses(kappa: float, delta: float):
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    if not 1.0 < delta < 3.0:
        raise DomainError("delta must lie in (1, 3)")
    if not 1.0 + kappa > delta:
        raise DomainError("need 1 + kappa > delta")


def lemma1_bound(m_lipschitz: float, kappa: float, delta: float, t: float) -> float:
    """Closed five-term bound on the lemma1 integral.

    M^(1+k) t^(2+k-d) [ 1/((2+k)(2+k-d)) + 1/((2+k)d) + 1/((2+k-d)(1+k-d))
                        + 1/(d(2+k-d)) + 1/(d(d-1)) ].
    """
    _check_lemma1_hypotheses(kappa, delta)
    if m_lipschitz < 0.0 or t < 0.0:
        raise DomainError("M and t must be >= 0")
    k, d = kappa, delta
    bracket = (1.0 / ((2.0 + k) * (2.0 + k - d))
               + 1.0 / ((2.0 + k) * d)
               + 1.0 / ((2.0 + k - d) * (1.0 + k - d))
               + 1.0 / (d * (2.0 + k - d))
               + 1.0 / (d * (d - 1.0)))
    return m_lipschitz ** (1.0 + k) * t ** (2.0 + k - d) * bracket


def lemma2_value(c: float, x: float) -> complex:
    """x^2 (e^(i c / x) - 1 - i c / x), evaluated cancellation-safely.

    Converges to -c^2/2 as x -> inf; a truncated Taylor series is used
    for small c/x where direct evaluation loses precision.
    """
    if not x > 0.0:
        raise DomainError("x must be positive")
    z = c / x
    if abs(z) < 1e-3:
        # e^(iz) - 1 - iz = -z^2/2 - i z^3/6 + z^4/24 + i z^5/120 - z^6/720 + ...
        series = (-z * z / 2.0 - 1j * z ** 3 / 6.0 + z ** 4 / 24.0
                  + 1j * z ** 5 / 120.0 - z ** 6 / 720.0)
        return x * x * series
    return x * x * (cmath.exp(1j * z) - 1.0 - 1j * z)
