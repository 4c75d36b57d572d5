"""Sample paths of the log price and ensembles thereof.

A path value is the fixed-order sum of atom kernels minus the analytic
centering value of the active compensation mode.  Evaluation is a direct
O(atoms x grid) summation over preallocated buffers; the per-path cost
is dominated by memory traffic, which keeps ensembles of a few billion
atom-time pairs inside desk-scale budgets.

Each path draws from an independent substream derived from
(master seed, path index, component index) through
``numpy.random.SeedSequence``; no state is shared between paths, so the
ensemble is embarrassingly parallel and its values do not depend on any
worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError
from .measures import (DurationLaw, ParetoDuration, PowerLawInfinite, RateLaw,
                       rate_mean, rate_second_moment)
from .pulses import Pulse
from .regimes import (CompensationMode, ScalingRegime, compensation_mode,
                      intensity, rate_multiplier)
from .sampler import (AtomBatch, SimulationWindow, compensator_value,
                      contributing_intensity, sample_atoms, truncation_variance,
                      upper_tail_variance)


@dataclass(frozen=True)
class PathGrid:
    """Strictly increasing evaluation times starting at 0."""

    times: tuple[float, ...]

    def __post_init__(self):
        ts = self.times
        if len(ts) < 1 or ts[0] != 0.0:
            raise ConfigurationError("grid must start at t = 0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError("grid times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return self.times[-1]

    def array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)


def uniform_grid(T: float, steps: int) -> PathGrid:
    if steps < 1:
        raise ConfigurationError("grid needs at least one step")
    return PathGrid(tuple(np.linspace(0.0, T, steps + 1)))


@dataclass(frozen=True)
class Component:
    """One agent type: arrival rate, duration law, rate law and pulse."""

    lam: float
    duration: DurationLaw
    rate: RateLaw
    pulse: Pulse


@dataclass(frozen=True)
class RunSpec:
    """Resolved simulation specification (laws, regime, grid, mode)."""

    components: tuple[Component, ...]
    regime: ScalingRegime
    grid: PathGrid
    mode: Optional[CompensationMode] = None  # None: regime default

    def __post_init__(self):
        if not self.components:
            raise ConfigurationError("need at least one component")


@dataclass
class Ensemble:
    """M sample paths on a shared grid plus run metadata."""

    times: np.ndarray
    values: np.ndarray  # shape (M, len(times))
    metadata: dict

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def at_time(self, t: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-12 * max(1.0, abs(t)):
            raise DomainError(f"time {t} not on the grid")
        return self.values[:, idx]


def evaluate_path(atoms: AtomBatch, pulse: Pulse, a: float,
                  compensation: np.ndarray, grid: PathGrid) -> np.ndarray:
    """Z(t_i) = a * sum_j r_j u_j increment(t_i, s_j, u_j) - compensation_i.

    Atom contributions are summed in atom-index order with numpy's
    deterministic pairwise reduction.
    """
    times = grid.array()
    out = np.empty(len(times))
    k = len(atoms)
    if k == 0:
        np.negative(compensation, out=out)
        return out
    s, u, r = atoms.s, atoms.u, atoms.r
    base = np.empty(k)
    np.negative(s, out=base)
    base = pulse.scaled_profile(base, u, out=base)  # u*f(-s/u), t-independent
    w = np.empty(k)
    for i, t in enumerate(times):
        np.subtract(t, s, out=w)
        pulse.scaled_profile(w, u, out=w)
        np.subtract(w, base, out=w)
        np.multiply(w, r, out=w)
        out[i] = a * w.sum() - compensation[i]
    return out


def price_path(values: np.ndarray) -> np.ndarray:
    """Y(t) = exp Z(t); Y(0) = 1.  Raises if exp would overflow."""
    values = np.asarray(values, dtype=float)
    worst = float(np.max(np.abs(values), initial=0.0))
    if worst > 709.0:
        raise NumericalError(f"|Z| = {worst:.3g} exceeds the exponent range of exp")
    return np.exp(values)


@dataclass(frozen=True)
class _ResolvedComponent:
    lambda_n: float
    law: DurationLaw
    rate: RateLaw
    pulse: Pulse
    a: float
    mode: CompensationMode
    comp_per_t: float
    total_mass: float


def _resolve(run: RunSpec):
    resolved = []
    for c in run.components:
        lambda_n, law_n = intensity(run.regime, c.lam, c.duration)
        a = rate_multiplier(run.regime, c.duration.delta)
        mode = run.mode or compensation_mode(run.regime, law_n)
        if mode is CompensationMode.RAW:
            coef = 0.0
        else:
            coef = compensator_value(c.pulse, lambda_n, law_n, rate_mean(c.rate), a, 1.0)
        lam_tot = contributing_intensity(lambda_n, law_n, run.grid.horizon)
        resolved.append(_ResolvedComponent(lambda_n, law_n, c.rate, c.pulse, a,
                                           mode, coef, lam_tot))
    return resolved


def path_substream(seed: int, path_index: int, component_index: int = 0) -> np.random.Generator:
    """Independent per-(path, component) generator from one master seed."""
    ss = np.random.SeedSequence((int(seed), int(path_index), int(component_index)))
    return np.random.Generator(np.random.PCG64(ss))


def simulate_ensemble(run: RunSpec, n_paths: int, seed: int) -> Ensemble:
    """M independent paths of the (possibly aggregated) process.

    Components are independent (multi-agent aggregation); their path
    values add.  Identical (run, n_paths, seed) give bitwise-identical
    ensembles.
    """
    if n_paths < 1:
        raise ConfigurationError("need at least one path")
    resolved = _resolve(run)
    times = run.grid.array()
    comp_arrays = [rc.comp_per_t * times for rc in resolved]
    window = SimulationWindow(run.grid.horizon)
    values = np.zeros((n_paths, len(times)))
    for m in range(n_paths):
        for i, rc in enumerate(resolved):
            rng = path_substream(seed, m, i)
            atoms = sample_atoms(rc.lambda_n, rc.law, rc.rate, window, rng)
            values[m] += evaluate_path(atoms, rc.pulse, rc.a, comp_arrays[i], run.grid)
    meta = {
        "seed": int(seed),
        "paths": int(n_paths),
        "regime": type(run.regime).__name__,
        "substreams": "pcg64 seeded by SeedSequence((seed, path, component))",
        "components": [_component_meta(rc, run.grid.horizon) for rc in resolved],
    }
    return Ensemble(times, values, meta)


def _component_meta(rc: _ResolvedComponent, horizon: float) -> dict:
    meta = {
        "lambda_n": rc.lambda_n,
        "Lambda": rc.total_mass,
        "rate_multiplier": rc.a,
        "mode": rc.mode.value,
        "compensator_per_t": rc.comp_per_t,
    }
    if isinstance(rc.law, PowerLawInfinite):
        rate_sq_eff = rc.a * rc.a * rate_second_moment(rc.rate)
        meta["u_min"] = rc.law.u_min
        meta["u_max"] = rc.law.u_max
        meta["truncation_variance"] = truncation_variance(
            rc.pulse, rc.law.delta, rc.lambda_n, rate_sq_eff, horizon, rc.law.u_min)
        meta["upper_tail_variance"] = upper_tail_variance(
            rc.pulse, rc.law.delta, rc.lambda_n, rate_sq_eff, horizon, rc.law.u_max)
    return meta
