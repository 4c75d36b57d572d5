"""Exact sampling of the Poisson random measure on the contributing region.

Only atoms with arrival s in (-u, T] can move the process on [0, T] (for
both plateau and compact pulses the increment vanishes outside), so the
restricted measure has total mass

    Lambda = lambda_n * int (T + u) nu(du),

finite whenever the duration measure has a finite mean integral.  The
duration of an atom follows the tilted density (T + u) nu(du) / Lambda,
sampled exactly as a two-component mixture (plain nu with weight
proportional to T, size-biased u*nu(du) otherwise); given u the arrival
is uniform on (-u, T].

Draws are consumed from the caller's generator in a fixed, documented
block order: atom count, mixture selectors, duration uniforms, position
uniforms, rate draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError
from .limits import DEFAULT_SETTINGS, QuadratureSettings
from .measures import (DurationLaw, ParetoDuration, PowerLawInfinite, RateLaw,
                       duration_moments, sample_rate, total_mass)
from .pulses import Pulse, linear_pieces
from . import limits


class Atom(NamedTuple):
    """One order: arrival time s, effect duration u, signed rate r."""

    s: float
    u: float
    r: float


@dataclass(frozen=True)
class SimulationWindow:
    """Horizon T plus the duration truncation used for infinite-measure runs."""

    T: float
    u_min: float | None = None
    u_max: float | None = None

    def __post_init__(self):
        if not self.T > 0.0:
            raise ConfigurationError("horizon T must be positive")
        if (self.u_min is None) != (self.u_max is None):
            raise ConfigurationError("u_min and u_max must be given together")
        if self.u_min is not None and not 0.0 < self.u_min < self.u_max:
            raise ConfigurationError("need 0 < u_min < u_max")


@dataclass
class AtomBatch:
    """Column layout of sampled atoms; iterates as :class:`Atom` tuples."""

    s: np.ndarray
    u: np.ndarray
    r: np.ndarray

    def __len__(self):
        return len(self.s)

    def __iter__(self):
        for row in zip(self.s, self.u, self.r):
            yield Atom(*row)

    @classmethod
    def concat(cls, batches):
        return cls(np.concatenate([b.s for b in batches]),
                   np.concatenate([b.u for b in batches]),
                   np.concatenate([b.r for b in batches]))


def contributing_intensity(lambda_n: float, law: DurationLaw, T: float) -> float:
    """Total mass Lambda = lambda_n * int (T + u) nu(du) of contributing atoms."""
    if lambda_n < 0.0:
        raise ConfigurationError("lambda_n must be >= 0")
    if not T > 0.0:
        raise DomainError("horizon T must be positive")
    m = duration_moments(law)
    return lambda_n * (T * m.mass + m.mean)


def _sample_tilted_durations(law: DurationLaw, T: float, rng, count: int):
    """Durations from (T + u) nu(du) / int (T + u) nu(du), exactly."""
    m = duration_moments(law)
    w_plain = T * m.mass / (T * m.mass + m.mean)
    pick_plain = rng.random(count) < w_plain
    v = rng.random(count)
    u = np.empty(count)
    d = law.delta
    if isinstance(law, ParetoDuration):
        # size-biased Pareto(b, delta) is Pareto(b, delta - 1)
        u[pick_plain] = law.b * v[pick_plain] ** (-1.0 / d)
        u[~pick_plain] = law.b * v[~pick_plain] ** (-1.0 / (d - 1.0))
    else:
        lo, hi = law.u_min, law.u_max
        span = lo ** -d - hi ** -d
        u[pick_plain] = (lo ** -d - v[pick_plain] * span) ** (-1.0 / d)
        # size-biased density proportional to u^(-delta) on [lo, hi]
        e = d - 1.0
        span_sb = lo ** -e - hi ** -e
        u[~pick_plain] = (lo ** -e - v[~pick_plain] * span_sb) ** (-1.0 / e)
    return u


def sample_atoms(lambda_n: float, law: DurationLaw, rate_law: RateLaw,
                 window: SimulationWindow, rng: np.random.Generator) -> AtomBatch:
    """All atoms of the restricted Poisson random measure on one window.

    Deterministic given the generator state; the count is Poisson(Lambda)
    and each atom's (s, u, r) follow the exact product construction.
    """
    T = window.T
    total = contributing_intensity(lambda_n, law, T)
    count = int(rng.poisson(total))
    if count == 0:
        z = np.empty(0)
        return AtomBatch(z.copy(), z.copy(), z.copy())
    u = _sample_tilted_durations(law, T, rng, count)
    w = rng.random(count)
    s = w * (T + u) - u  # uniform on (-u, T]
    r = np.asarray(sample_rate(rate_law, rng, count), dtype=float)
    return AtomBatch(s, u, r)


def compensator_value(pulse: Pulse, lambda_n: float, law: DurationLaw,
                      rate_mean: float, rate_multiplier: float, t: float) -> float:
    """Centering value at time t (closed form).

    Equals a * lambda_n * E R * t * f(1) * int u nu(du): the mean of the
    aggregate in centered mode, and the mean-measure integral subtracted
    in compensated mode.  Zero for compact pulses and at t = 0.
    """
    if t < 0.0:
        raise DomainError("time must be >= 0")
    m = duration_moments(law)
    return rate_multiplier * lambda_n * rate_mean * t * pulse.plateau_value * m.mean


def compensator_value_quadrature(pulse: Pulse, lambda_n: float, law: DurationLaw,
                                 rate_mean: float, rate_multiplier: float, t: float,
                                 settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Quadrature cross-check of :func:`compensator_value` (rel tol 1e-8)."""
    if t < 0.0:
        raise DomainError("time must be >= 0")
    if t == 0.0:
        return 0.0

    def inner(u):
        # trapezoid form of the exact affine integral per piece
        return sum((s1 - s0) * ((a * s0 + b) + (a * s1 + b)) / 2.0
                   for s0, s1, a, b in linear_pieces(pulse, t, u))

    total = limits._integrate_duration(inner, law, t, pulse, settings,
                                       "compensator quadrature")
    return rate_multiplier * lambda_n * rate_mean * total


def truncation_variance(pulse: Pulse, delta: float, lambda_n: float, rate_sq: float,
                        t: float, u_cut: float,
                        settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Variance of the compensated mass discarded below u_cut.

    Quadrature of lambda_n * E(aR)^2 * (u*increment)^2 u^(-delta-1) over
    u in (0, u_cut); certifies that a truncation lower bound u_min is
    small enough for the declared variance budget.  ``rate_sq`` is the
    second moment of the effective (multiplier-scaled) rate.
    """
    if not u_cut > 0.0:
        raise DomainError("u_cut must be positive")
    return lambda_n * rate_sq * limits.partial_second_moment(
        pulse, delta, t, 0.0, u_cut, settings)


def truncation_variance_bound(m_lipschitz: float, delta: float, lambda_n: float,
                              rate_sq: float, t: float, u_cut: float,
                              kappa: float = 1.0) -> float:
    """Closed analytic majorant of :func:`truncation_variance` for u_cut <= t.

    Regional Lipschitz bounds on the increment give, per unit intensity,
    M^(1+k) [ t c^(1+k-d)/(1+k-d) + 2 c^(2+k-d)/((2+k)(2+k-d)) ].
    """
    if not 0.0 < u_cut <= t:
        raise DomainError("bound valid for 0 < u_cut <= t")
    limits._check_lemma1_hypotheses(kappa, delta)
    k, d, c = kappa, delta, u_cut
    bracket = (t * c ** (1.0 + k - d) / (1.0 + k - d)
               + 2.0 * c ** (2.0 + k - d) / ((2.0 + k) * (2.0 + k - d)))
    return lambda_n * rate_sq * m_lipschitz ** (1.0 + k) * bracket


def upper_tail_variance(pulse: Pulse, delta: float, lambda_n: float, rate_sq: float,
                        t: float, u_hi: float,
                        settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Variance carried by durations above u_hi (reported for u_max truncation)."""
    if not u_hi > 0.0:
        raise DomainError("u_hi must be positive")
    return lambda_n * rate_sq * limits.partial_second_moment(
        pulse, delta, t, u_hi, np.inf, settings)


def effective_law(law: DurationLaw, window: SimulationWindow) -> DurationLaw:
    """Apply the window's truncation bounds to an infinite-measure law."""
    if isinstance(law, PowerLawInfinite) and window.u_min is not None:
        return PowerLawInfinite(law.delta, window.u_min, window.u_max)
    return law
