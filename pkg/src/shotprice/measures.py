"""Duration and rate measures: tails, moments, scalings and exact samplers.

The duration measure is either a Pareto probability law (heavy tail with
index delta in (1, 2), so finite mean but infinite variance) or the
truncated version of the infinite measure u^(-delta-1) du.  The rate law
is any distribution with all moments finite; it carries the sign of buy
and sell orders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError, NumericalError


@dataclass(frozen=True)
class ParetoDuration:
    """Pareto probability law: density delta * b^delta * u^(-delta-1) on u > b."""

    b: float
    delta: float

    def __post_init__(self):
        if not self.b > 0.0:
            raise ConfigurationError("Pareto scale b must be positive")
        if not 1.0 < self.delta < 2.0:
            raise ConfigurationError("Pareto tail index delta must lie in (1, 2)")


@dataclass(frozen=True)
class PowerLawInfinite:
    """Truncation of the infinite measure u^(-delta-1) du to [u_min, u_max].

    Not a probability law; its total mass is (u_min^-delta - u_max^-delta)/delta.
    """

    delta: float
    u_min: float
    u_max: float

    def __post_init__(self):
        if not self.delta > 1.0:
            raise ConfigurationError("power-law index delta must exceed 1")
        if not 0.0 < self.u_min < self.u_max < np.inf:
            raise ConfigurationError("need 0 < u_min < u_max < inf")


DurationLaw = Union[ParetoDuration, PowerLawInfinite]


@dataclass(frozen=True)
class DurationMoments:
    """Integrals of 1, u, u^2 against the measure (raw, not normalised)."""

    mean: float
    second: float
    mass: float


def tail_probability(law: DurationLaw, u):
    """Mass of (u, inf) under the duration measure.

    For the truncated power law this is the (unnormalised) truncated tail,
    clipped to [0, total mass].
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise DomainError("tail_probability requires u > 0")
    if isinstance(law, ParetoDuration):
        out = np.minimum(1.0, (law.b / u) ** law.delta)
    else:
        d = law.delta
        lo = np.maximum(u, law.u_min)
        out = (lo ** -d - law.u_max ** -d) / d
        out = np.clip(out, 0.0, total_mass(law))
    return out if out.ndim else float(out)


def total_mass(law: DurationLaw) -> float:
    if isinstance(law, ParetoDuration):
        return 1.0
    d = law.delta
    return (law.u_min ** -d - law.u_max ** -d) / d


def duration_moments(law: DurationLaw) -> DurationMoments:
    """Closed-form mean/second-moment integrals of the duration measure."""
    if isinstance(law, ParetoDuration):
        b, d = law.b, law.delta
        mean = d * b / (d - 1.0)
        second = d * b * b / (d - 2.0) if d > 2.0 else np.inf
        return DurationMoments(mean, second, 1.0)
    d, lo, hi = law.delta, law.u_min, law.u_max
    mean = (lo ** (1.0 - d) - hi ** (1.0 - d)) / (d - 1.0)
    if d == 2.0:
        second = np.log(hi / lo)
    else:
        second = (hi ** (2.0 - d) - lo ** (2.0 - d)) / (2.0 - d)
    return DurationMoments(mean, second, total_mass(law))


def scale_duration(law: DurationLaw, n: float) -> DurationLaw:
    """The measure of U/n, i.e. nu(d(n u)): Pareto with b -> b/n.

    The infinite variant is already the scaling's limit object and is
    rejected.
    """
    if not n >= 1.0:
        raise DomainError("scaling factor n must be >= 1")
    if isinstance(law, PowerLawInfinite):
        raise ConfigurationError("scale_duration applies only to ParetoDuration")
    return ParetoDuration(law.b / n, law.delta)


def duration_density(law: DurationLaw, u):
    """Density of the measure with respect to du (0 outside the support)."""
    u = np.asarray(u, dtype=float)
    d = law.delta
    if isinstance(law, ParetoDuration):
        dens = np.where(u > law.b, d * law.b ** d * u ** (-d - 1.0), 0.0)
    else:
        dens = np.where((u >= law.u_min) & (u <= law.u_max), u ** (-d - 1.0), 0.0)
    return dens if dens.ndim else float(dens)


def sample_duration(law: DurationLaw, rng: np.random.Generator, size=None):
    """Inverse-CDF sampling of the normalised duration law."""
    v = rng.random(size)
    if isinstance(law, ParetoDuration):
        # P(U > u) = (b/u)^delta inverted at V: u = b * V^(-1/delta)
        return law.b * v ** (-1.0 / law.delta)
    d, lo, hi = law.delta, law.u_min, law.u_max
    span = lo ** -d - hi ** -d
    return (lo ** -d - v * span) ** (-1.0 / d)


def duration_cdf(law: DurationLaw, u):
    """CDF of the normalised duration law (for goodness-of-fit tests)."""
    u = np.asarray(u, dtype=float)
    if isinstance(law, ParetoDuration):
        out = np.where(u <= law.b, 0.0, 1.0 - (law.b / np.maximum(u, law.b)) ** law.delta)
    else:
        d, lo, hi = law.delta, law.u_min, law.u_max
        uu = np.clip(u, lo, hi)
        out = (lo ** -d - uu ** -d) / (lo ** -d - hi ** -d)
        out = np.where(u < lo, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TwoPoint:
    """Rate +r_plus with probability p, -r_minus with probability 1 - p."""

    p: float
    r_plus: float
    r_minus: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError("probability p must lie in [0, 1]")
        if self.r_plus <= 0.0 or self.r_minus <= 0.0:
            raise ConfigurationError("two-point rates must be positive")


@dataclass(frozen=True)
class GaussianRate:
    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0.0:
            raise ConfigurationError("std must be >= 0")


@dataclass(frozen=True)
class DiscreteRate:
    """Finite support rate law given as ((value, probability), ...)."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        probs = np.array([p for _, p in self.atoms], dtype=float)
        if len(probs) == 0 or np.any(probs < 0.0):
            raise ConfigurationError("discrete rate needs nonnegative probabilities")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigurationError("discrete rate probabilities must sum to 1")


RateLaw = Union[TwoPoint, GaussianRate, DiscreteRate]


@dataclass(frozen=True)
class RateMoments:
    mean: float
    abs_p: float  # E|R|^(1+kappa)
    sq: float  # E R^2
    c1: float  # E R^delta 1{R > 0}
    c2: float  # E|R|^delta 1{R < 0}


def discrete_atoms(law: RateLaw):
    """(value, probability) support for discrete laws, None for Gaussian."""
    if isinstance(law, TwoPoint):
        return ((law.r_plus, law.p), (-law.r_minus, 1.0 - law.p))
    if isinstance(law, DiscreteRate):
        return law.atoms
    return None


def rate_mean(law: RateLaw) -> float:
    if isinstance(law, GaussianRate):
        return law.mean
    return float(sum(v * p for v, p in discrete_atoms(law)))


def rate_second_moment(law: RateLaw) -> float:
    if isinstance(law, GaussianRate):
        return law.mean ** 2 + law.std ** 2
    return float(sum(v * v * p for v, p in discrete_atoms(law)))


def _gaussian_abs_moment(mean, std, p, sign=None, rel_tol=1e-11):
    """E |R|^p (restricted to sign(R)=sign if given) for R ~ N(mean, std^2)."""
    if std == 0.0:
        if sign is not None and (mean == 0.0 or np.sign(mean) != sign):
            return 0.0
        return abs(mean) ** p

    def dens(x):
        z = (x - mean) / std
        return np.exp(-0.5 * z * z) / (std * np.sqrt(2.0 * np.pi))

    parts = []
    if sign is None or sign > 0:
        parts.append(integrate.quad(lambda x: x ** p * dens(x), 0.0, np.inf,
                                    epsabs=0.0, epsrel=rel_tol, limit=200))
    if sign is None or sign < 0:
        parts.append(integrate.quad(lambda x: (-x) ** p * dens(x), -np.inf, 0.0,
                                    epsabs=0.0, epsrel=rel_tol, limit=200))
    value = sum(v for v, _ in parts)
    err = sum(e for _, e in parts)
    if value > 0.0 and err > 10.0 * rel_tol * value + 1e-300:
        raise NumericalError(f"gaussian moment quadrature error {err:g} too large")
    return value


def rate_moments(law: RateLaw, delta: float, kappa: float = 1.0) -> RateMoments:
    """Moment summary used by the limit theorems.

    ``c1``/``c2`` are the positive/negative tail constants entering the
    stable limit; for Gaussian laws the fractional moments are computed by
    adaptive quadrature to relative tolerance 1e-10.
    """
    if not 1.0 < delta < 2.0:
        raise DomainError("stability index delta must lie in (1, 2)")
    if not 0.0 < kappa <= 1.0:
        raise DomainError("moment order kappa must lie in (0, 1]")
    atoms = discrete_atoms(law)
    if atoms is not None:
        mean = sum(v * p for v, p in atoms)
        abs_p = sum(abs(v) ** (1.0 + kappa) * p for v, p in atoms)
        sq = sum(v * v * p for v, p in atoms)
        c1 = sum(v ** delta * p for v, p in atoms if v > 0)
        c2 = sum((-v) ** delta * p for v, p in atoms if v < 0)
        return RateMoments(float(mean), float(abs_p), float(sq), float(c1), float(c2))
    return RateMoments(
        law.mean,
        _gaussian_abs_moment(law.mean, law.std, 1.0 + kappa),
        law.mean ** 2 + law.std ** 2,
        _gaussian_abs_moment(law.mean, law.std, delta, sign=+1),
        _gaussian_abs_moment(law.mean, law.std, delta, sign=-1),
    )


def sample_rate(law: RateLaw, rng: np.random.Generator, size=None):
    """Draw rates; discrete laws by cumulative lookup, Gaussian directly."""
    if isinstance(law, GaussianRate):
        return law.mean + law.std * rng.standard_normal(size)
    if isinstance(law, TwoPoint):
        v = rng.random(size)
        return np.where(v < law.p, law.r_plus, -law.r_minus)
    values = np.array([v for v, _ in law.atoms])
    cum = np.cumsum([p for _, p in law.atoms])
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return values[np.minimum(idx, len(values) - 1)]
