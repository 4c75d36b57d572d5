"""The five scaling regimes, encoded as data.

Each regime fixes three things: the multiplier applied to every sampled
rate, the effective Poisson intensity together with the effective
duration law, and whether the simulated process is centered by its mean
or compensated against the mean measure.  The slowly varying tail factor
is constant for the Pareto family (h = delta * b^delta), so every
n^./h(.) factor below has a closed form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

from .errors import ConfigurationError, DomainError
from .measures import DurationLaw, ParetoDuration, PowerLawInfinite, scale_duration


@dataclass(frozen=True)
class Unscaled:
    pass


@dataclass(frozen=True)
class Intermediate:
    n: int


@dataclass(frozen=True)
class FastProbability:
    n: int


@dataclass(frozen=True)
class FastSimple:
    n: int


@dataclass(frozen=True)
class SlowProbability:
    n: int
    alpha: float


@dataclass(frozen=True)
class SlowSimple:
    n: int


ScalingRegime = Union[Unscaled, Intermediate, FastProbability, FastSimple,
                      SlowProbability, SlowSimple]

_PROBABILITY_REGIMES = (Intermediate, FastProbability, SlowProbability)
_SIMPLE_REGIMES = (FastSimple, SlowSimple)


class CompensationMode(enum.Enum):
    RAW = "raw"
    CENTERED = "centered"
    COMPENSATED = "compensated"


def _scaling_n(regime: ScalingRegime) -> int:
    return getattr(regime, "n", 1)


def check_admissible(regime: ScalingRegime, delta: float) -> None:
    """Validate the (regime, delta) combination of the limit theorems."""
    if isinstance(regime, Unscaled):
        return
    n = _scaling_n(regime)
    if not (isinstance(n, int) and n >= 1):
        raise ConfigurationError("scaling factor n must be an integer >= 1")
    if isinstance(regime, FastSimple):
        if not 1.0 < delta < 3.0:
            raise ConfigurationError("fast simple regime requires delta in (1, 3)")
        return
    if not 1.0 < delta < 2.0:
        raise ConfigurationError(f"{type(regime).__name__} requires delta in (1, 2)")
    if isinstance(regime, SlowProbability) and not 0.0 < regime.alpha < delta:
        raise ConfigurationError("slow probability regime requires 0 < alpha < delta")


def rate_multiplier(regime: ScalingRegime, delta: float) -> float:
    """Factor applied to every sampled rate r."""
    check_admissible(regime, delta)
    n = float(_scaling_n(regime))
    if isinstance(regime, (Unscaled, Intermediate)):
        return 1.0
    if isinstance(regime, (FastProbability, FastSimple)):
        return 1.0 / n
    if isinstance(regime, SlowProbability):
        return n ** (1.0 - regime.alpha / delta)
    return n  # SlowSimple


def intensity(regime: ScalingRegime, lam: float, law: DurationLaw):
    """Effective arrival intensity lambda_n and effective duration law.

    Probability-measure regimes require a Pareto law (scaled to b/n with
    the constant-h closed form for the intensity); simple regimes require
    the truncated power law (left unchanged).
    """
    if lam < 0.0:
        raise ConfigurationError("arrival rate lambda must be >= 0")
    if isinstance(regime, Unscaled):
        return lam, law
    check_admissible(regime, law.delta)
    n = float(regime.n)
    if isinstance(regime, _PROBABILITY_REGIMES):
        if not isinstance(law, ParetoDuration):
            raise ConfigurationError(
                f"{type(regime).__name__} requires a Pareto duration law")
        h_const = law.delta * law.b ** law.delta
        scaled = scale_duration(law, n)
        if isinstance(regime, Intermediate):
            return lam * n ** law.delta / h_const, scaled
        if isinstance(regime, FastProbability):
            return lam * n ** (2.0 + law.delta) / h_const, scaled
        # SlowProbability: intensity n^alpha / h(n^(alpha/delta)); h constant
        return lam * n ** regime.alpha / h_const, scaled
    if not isinstance(law, PowerLawInfinite):
        raise ConfigurationError(
            f"{type(regime).__name__} requires the truncated power-law duration")
    if isinstance(regime, FastSimple):
        return lam * n * n, law
    return lam * n ** -law.delta, law  # SlowSimple


def compensation_mode(regime: ScalingRegime, law: DurationLaw) -> CompensationMode:
    """Centering convention of the matching limit theorem."""
    if isinstance(regime, _SIMPLE_REGIMES):
        return CompensationMode.COMPENSATED
    if isinstance(regime, Unscaled):
        return (CompensationMode.COMPENSATED if isinstance(law, PowerLawInfinite)
                else CompensationMode.CENTERED)
    return CompensationMode.CENTERED


def expected_active_effects(lambda_n: float, n: float, delta: float) -> float:
    """Asymptotic mean number of effects still active at time n."""
    if not n >= 1.0:
        raise DomainError("n must be >= 1")
    return lambda_n / n ** (delta - 1.0)
