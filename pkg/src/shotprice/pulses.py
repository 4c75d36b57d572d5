"""Deterministic effect shapes (pulses) and the order effect kernel.

A pulse is a piecewise-linear function f on [0, 1] with f(x) = 0 for x <= 0
and either a plateau (f(x) = f(1) for x >= 1) or compact support
(f(1) = 0 and f(x) = 0 for x >= 1).  One order arriving at time s with
duration u and rate r moves the log price at time t by

    kernel(t, s, u, r) = r * u * [f((t - s)/u) - f(-s/u)].

Piecewise linearity is what makes the quadrature oracles exact: on any
s-interval between breakpoints the scaled increment u*[f(...) - f(...)]
is an affine function of s (see :func:`linear_pieces`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

PLATEAU = "plateau"
COMPACT = "compact"

LINEAR_PLATEAU = "linear_plateau"
TRIANGLE = "triangle"
CUSTOM = "custom"


@dataclass(frozen=True)
class Pulse:
    """Piecewise-linear effect shape with declared Lipschitz metadata.

    ``knots_x``/``knots_y`` define f on [0, 1]; the first knot is (0, 0)
    and the last has x = 1.  ``lipschitz_f`` is the constant M for f;
    ``lipschitz_df`` bounds the Lipschitz constant of f' within pieces
    (0 for piecewise-linear pulses, whose derivative is constant between
    finitely many jump points).
    """

    kind: str
    knots_x: tuple[float, ...]
    knots_y: tuple[float, ...]
    support_kind: str
    lipschitz_f: float
    lipschitz_df: float = 0.0

    def __post_init__(self):
        if self.support_kind not in (PLATEAU, COMPACT):
            raise ConfigurationError(f"unknown support kind {self.support_kind!r}")
        xs, ys = self.knots_x, self.knots_y
        if len(xs) != len(ys) or len(xs) < 2:
            raise ConfigurationError("pulse needs at least two (x, y) knots")
        if xs[0] != 0.0 or ys[0] != 0.0:
            raise ConfigurationError("first pulse knot must be (0, 0)")
        if xs[-1] != 1.0:
            raise ConfigurationError("last pulse knot must have x = 1")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigurationError("pulse knots must be strictly increasing in x")
        if self.support_kind == COMPACT and ys[-1] != 0.0:
            raise ConfigurationError("compact pulses require f(1) = 0")
        if self.lipschitz_f < 0 or self.lipschitz_df < 0:
            raise ConfigurationError("Lipschitz constants must be >= 0")

    @property
    def plateau_value(self) -> float:
        """f(1); the level a single order leaves behind (0 for compact pulses)."""
        return self.knots_y[-1]

    def value(self, x):
        """Evaluate f at x (scalar or array); 0 for x <= 0."""
        return np.interp(x, self.knots_x, self.knots_y, left=0.0, right=self.plateau_value)

    def scaled_profile(self, x, u, out=None):
        """u * f(x / u) without forming the ratio for the built-in kinds.

        ``x`` and ``u`` broadcast; ``out`` may alias ``x`` storage.  This is
        the hot path of path evaluation, so the two standard kinds avoid
        division and interpolation entirely.
        """
        if self.kind == LINEAR_PLATEAU:
            # u * ((x/u) ^ 1) for x >= 0  ==  clip(x, 0, u)
            return np.clip(x, 0.0, u, out=out)
        if self.kind == TRIANGLE:
            # u * (1/2 - |x/u - 1/2|)^+  ==  max(0, min(x, u - x))
            lo = np.minimum(x, u - x)
            return np.clip(lo, 0.0, None, out=out if out is not None else lo)
        res = u * self.value(np.divide(x, u))
        if out is not None:
            out[...] = res
            return out
        return res

    def increment(self, t, s, u):
        """f((t - s)/u) - f(-s/u); zero whenever s > t or s + u <= 0."""
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0):
            raise DomainError("duration u must be positive")
        return (self.scaled_profile(t - np.asarray(s, dtype=float), u)
                - self.scaled_profile(-np.asarray(s, dtype=float), u)) / u

    def scaled_increment(self, t, s, u):
        """u * increment(t, s, u); affine in s between breakpoints."""
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0):
            raise DomainError("duration u must be positive")
        s = np.asarray(s, dtype=float)
        return self.scaled_profile(t - s, u) - self.scaled_profile(-s, u)

    def kernel(self, t, s, u, r):
        """Monetary effect r * u * increment(t, s, u) of one order at time t."""
        return r * self.scaled_increment(t, s, u)


def linear_plateau() -> Pulse:
    """Linearly increasing effect with unit rate that then stays constant."""
    return Pulse(LINEAR_PLATEAU, (0.0, 1.0), (0.0, 1.0), PLATEAU, 1.0)


def triangle() -> Pulse:
    """Symmetric up-down effect that vanishes after the duration."""
    return Pulse(TRIANGLE, (0.0, 0.5, 1.0), (0.0, 0.5, 0.0), COMPACT, 1.0)


def custom_piecewise(knots, support: str, lipschitz_f: float | None = None) -> Pulse:
    """Pulse from explicit (x, y) knots on [0, 1].

    ``lipschitz_f`` defaults to the steepest piece slope (the exact
    constant for a piecewise-linear function).
    """
    xs = tuple(float(x) for x, _ in knots)
    ys = tuple(float(y) for _, y in knots)
    if lipschitz_f is None:
        lipschitz_f = max(
            abs(y1 - y0) / (x1 - x0) for (x0, y0, x1, y1) in zip(xs, ys, xs[1:], ys[1:])
        )
    return Pulse(CUSTOM, xs, ys, support, float(lipschitz_f))


def breakpoints_s(pulse: Pulse, t: float, u: float) -> np.ndarray:
    """Sorted s-values in [-u, t] where the scaled increment changes slope.

    These are the preimages of the pulse knots under s -> (t - s)/u and
    s -> -s/u.  Outside [-u, t] the increment is identically zero.
    """
    if u <= 0.0:
        raise DomainError("duration u must be positive")
    xs = np.asarray(pulse.knots_x)
    pts = np.concatenate([t - xs * u, -xs * u])
    pts = pts[(pts > -u) & (pts < t)]
    return np.unique(np.concatenate([[-u], np.sort(pts), [t]]))


def linear_pieces(pulse: Pulse, t: float, u: float):
    """Affine decomposition of s -> u*increment(t, s, u) on [-u, t].

    Returns a list of (s0, s1, a, b) with u*increment == a*s + b on
    [s0, s1].  Exact for every pulse kind because f is piecewise linear.
    Only reliable while u and t are within a few orders of magnitude of
    each other; :func:`increment_value_pieces` covers the full range.
    """
    brk = breakpoints_s(pulse, t, u)
    vals = pulse.scaled_increment(t, brk, u)
    pieces = []
    for s0, s1, v0, v1 in zip(brk, brk[1:], vals, vals[1:]):
        a = (v1 - v0) / (s1 - s0)
        pieces.append((float(s0), float(s1), float(a), float(v0 - a * s0)))
    return pieces


def _slopes(pulse: Pulse):
    xs, ys = pulse.knots_x, pulse.knots_y
    return [(y1 - y0) / (x1 - x0) for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:])]


def increment_value_pieces(pulse: Pulse, t: float, u: float):
    """Length/endpoint-value pieces of s -> u*increment(t, s, u) on [-u, t].

    Returns (h, v0, v1) triples: over a piece of length h the value moves
    linearly from v0 to v1; the piece lengths sum to t + u.  Unlike raw
    s-breakpoints, this decomposition stays exact for arbitrarily extreme
    u/t ratios: for u <= t the two pulse transitions are parameterised on
    the unit pulse, and for t/u below the smallest knot gap the shifted
    difference f(w + t/u) - f(w) is built from the knot slopes directly.
    """
    if u <= 0.0:
        raise DomainError("duration u must be positive")
    if t <= 0.0:
        return []
    xs, ys = pulse.knots_x, pulse.knots_y
    f1 = pulse.plateau_value
    if u <= t:
        pieces = []
        # orders ending before t: increment climbs from 0 to f(1) over [-u, 0]
        for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:]):
            pieces.append((u * (x1 - x0), u * (f1 - y1), u * (f1 - y0)))
        pieces.append((t - u, u * f1, u * f1))
        # orders still running at t: the pulse itself over [t-u, t]
        for x0, y0, x1, y1 in zip(xs, ys, xs[1:], ys[1:]):
            pieces.append((u * (x1 - x0), u * y1, u * y0))
        return pieces
    eps = t / u
    gaps = [x1 - x0 for x0, x1 in zip(xs, xs[1:])]
    if eps >= min(gaps):
        return [(s1 - s0, a * s0 + b, a * s1 + b)
                for s0, s1, a, b in linear_pieces(pulse, t, u)]
    # w = -s/u: increment equals f(w + eps) - f(w); with eps below every
    # knot gap the pieces follow from the slopes alone (no cancellation)
    slopes = [0.0] + _slopes(pulse) + [0.0]
    pieces = []
    for k in range(len(xs)):
        pieces.append((t, t * slopes[k], t * slopes[k + 1]))
        if k < len(gaps):
            level = t * slopes[k + 1]
            pieces.append((u * (gaps[k] - eps), level, level))
    return pieces


def duration_kinks(pulse: Pulse, t: float) -> list[float]:
    """u-values at which the breakpoint ordering of linear_pieces changes.

    Used as split points for adaptive quadrature in u; kinks occur where
    two breakpoints collide, i.e. u = t / (x_i - x_j) for knot pairs.
    """
    xs = pulse.knots_x
    kinks = set()
    for xi, xj in itertools.combinations(xs, 2):
        d = abs(xi - xj)
        if d > 0.0 and t > 0.0:
            kinks.add(t / d)
    return sorted(kinks)


@dataclass(frozen=True)
class PulseValidation:
    """Report produced by :func:`validate`; ``passed`` summarises all checks."""

    passed: bool
    checks: tuple[tuple[str, bool, float], ...]
    worst_pair: tuple[float, float] | None = None

    def failures(self):
        return [c for c in self.checks if not c[1]]


def validate(pulse: Pulse, grid_points: int = 2001) -> PulseValidation:
    """Check the declared pulse invariants on a dense grid (report only).

    Verifies vanishing on negatives, the support condition, that the
    steepest chord of f does not exceed the declared Lipschitz constant,
    and that the derivative is piecewise constant (so f' is Lipschitz
    a.e. within pieces with constant <= lipschitz_df).
    """
    checks = []

    xneg = np.linspace(-5.0, 0.0, grid_points)
    worst_neg = float(np.max(np.abs(pulse.value(xneg))))
    checks.append(("vanishes_on_negatives", worst_neg == 0.0, worst_neg))

    xfar = np.linspace(1.0, 6.0, grid_points)
    tail = pulse.value(xfar)
    if pulse.support_kind == PLATEAU:
        worst_tail = float(np.max(np.abs(tail - pulse.plateau_value)))
    else:
        worst_tail = float(np.max(np.abs(tail)))
    checks.append(("support_condition", worst_tail == 0.0, worst_tail))

    # Steepest chord of a piecewise-linear function is attained on a knot
    # piece; the dense grid guards the implementation rather than the math.
    xs = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_points), pulse.knots_x]))
    ys = pulse.value(xs)
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    imax = int(np.argmax(slopes))
    worst_slope = float(slopes[imax])
    ok = worst_slope <= pulse.lipschitz_f * (1.0 + 1e-12)
    checks.append(("lipschitz_f", ok, worst_slope / pulse.lipschitz_f if pulse.lipschitz_f else np.inf))
    worst_pair = (float(xs[imax]), float(xs[imax + 1])) if not ok else None

    n_jumps = len(pulse.knots_x)
    checks.append(("derivative_piecewise", np.isfinite(n_jumps), float(n_jumps)))
    checks.append(("lipschitz_df_within_pieces", 0.0 <= pulse.lipschitz_df, 0.0))

    return PulseValidation(all(c[1] for c in checks), tuple(checks), worst_pair)
