"""Experiment configuration: strict parsing, canonical serialization, hashing.

Configs are flat TOML tables with exactly the keys listed per section;
unknown keys are hard errors so regime or law typos cannot silently
change an experiment.  Serialization is canonical (fixed key order,
shortest round-trip float formatting), which makes
parse -> serialize -> parse the identity and the config hash stable.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError
from .measures import (DiscreteRate, DurationLaw, GaussianRate, ParetoDuration,
                       PowerLawInfinite, RateLaw, TwoPoint, rate_second_moment)
from .process import Component, PathGrid, RunSpec, uniform_grid
from .pulses import (COMPACT, PLATEAU, Pulse, custom_piecewise, linear_plateau,
                     triangle)
from .regimes import (FastProbability, FastSimple, Intermediate, ScalingRegime,
                      SlowProbability, SlowSimple, Unscaled, intensity,
                      rate_multiplier)
from .sampler import truncation_variance

REGIME_TAGS = ("none", "thm1", "thm2", "thm3", "thm4", "thm5")

_COMPONENT_KEYS = ("lambda", "duration", "rate", "pulse")
_TOP_KEYS = _COMPONENT_KEYS + ("seed", "paths", "regime", "grid", "truncation",
                               "components")


@dataclass(frozen=True)
class ExperimentConfig:
    """Normalised experiment description (see the README for the format)."""

    regime: dict
    grid: dict
    lam: Optional[float] = None
    duration: Optional[dict] = None
    rate: Optional[dict] = None
    pulse: Optional[dict] = None
    truncation: Optional[dict] = None
    components: Optional[tuple] = None
    seed: int = 0
    paths: int = 100

    def to_dict(self) -> dict:
        out = {}
        if self.components is None:
            out.update({"lambda": self.lam, "duration": self.duration,
                        "rate": self.rate, "pulse": self.pulse})
        else:
            out["components"] = list(self.components)
        out.update({"seed": self.seed, "paths": self.paths,
                    "regime": self.regime, "grid": self.grid})
        if self.truncation is not None:
            out["truncation"] = self.truncation
        return out


def _require(table: dict, path: str, known: dict):
    """Check key set and coerce values; ``known`` maps key -> (kind, required)."""
    for key in table:
        if key not in known:
            raise ConfigurationError(f"unknown key {path}.{key}")
    out = {}
    for key, (kind, required) in known.items():
        if key not in table:
            if required:
                raise ConfigurationError(f"missing key {path}.{key}")
            continue
        out[key] = _coerce(table[key], kind, f"{path}.{key}")
    return out


def _coerce(value, kind, path):
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path} must be a number")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path} must be an integer")
        return int(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigurationError(f"{path} must be a string")
        return value
    if kind == "floatlist":
        if not isinstance(value, list) or not value:
            raise ConfigurationError(f"{path} must be a non-empty list of numbers")
        return [_coerce(v, "float", path) for v in value]
    if kind == "pairs":
        if not isinstance(value, list) or not value:
            raise ConfigurationError(f"{path} must be a non-empty list of [x, y] pairs")
        out = []
        for item in value:
            if not isinstance(item, list) or len(item) != 2:
                raise ConfigurationError(f"{path} entries must be [x, y] pairs")
            out.append([_coerce(item[0], "float", path), _coerce(item[1], "float", path)])
        return out
    raise AssertionError(kind)


def _parse_duration(table, path):
    kind = _require({"type": table.get("type")}, path, {"type": ("str", True)})["type"]
    if kind == "pareto":
        return _require(table, path, {"type": ("str", True), "b": ("float", True),
                                      "delta": ("float", True)})
    if kind == "powerlaw":
        return _require(table, path, {"type": ("str", True), "delta": ("float", True),
                                      "u_min": ("float", False), "u_max": ("float", False)})
    raise ConfigurationError(f"{path}.type must be 'pareto' or 'powerlaw'")


def _parse_rate(table, path):
    kind = table.get("type")
    if kind == "twopoint":
        return _require(table, path, {"type": ("str", True), "p": ("float", True),
                                      "r_plus": ("float", True), "r_minus": ("float", True)})
    if kind == "gaussian":
        return _require(table, path, {"type": ("str", True), "mean": ("float", True),
                                      "std": ("float", True)})
    if kind == "discrete":
        return _require(table, path, {"type": ("str", True), "atoms": ("pairs", True)})
    raise ConfigurationError(f"{path}.type must be 'twopoint', 'gaussian' or 'discrete'")


def _parse_pulse(table, path):
    kind = table.get("type")
    if kind in ("linear_plateau", "triangle"):
        return _require(table, path, {"type": ("str", True)})
    if kind == "custom":
        out = _require(table, path, {"type": ("str", True), "knots": ("pairs", True),
                                     "support": ("str", True)})
        if out["support"] not in (PLATEAU, COMPACT):
            raise ConfigurationError(f"{path}.support must be 'plateau' or 'compact'")
        return out
    raise ConfigurationError(f"{path}.type must be 'linear_plateau', 'triangle' or 'custom'")


def _parse_regime(table, path):
    kind = table.get("type")
    if kind not in REGIME_TAGS:
        raise ConfigurationError(f"{path}.type must be one of {REGIME_TAGS}")
    out = _require(table, path, {"type": ("str", True), "n": ("int", False),
                                 "alpha": ("float", False)})
    if kind == "none":
        if "n" in out or "alpha" in out:
            raise ConfigurationError(f"{path}: 'none' takes no n or alpha")
    elif kind == "thm4":
        if "n" not in out or "alpha" not in out:
            raise ConfigurationError(f"{path}: thm4 needs both n and alpha")
    else:
        if "n" not in out:
            raise ConfigurationError(f"{path}: {kind} needs n")
        if "alpha" in out:
            raise ConfigurationError(f"{path}: alpha applies only to thm4")
    return out


def _parse_grid(table, path):
    out = _require(table, path, {"T": ("float", False), "steps": ("int", False),
                                 "times": ("floatlist", False)})
    if "times" in out:
        if "T" in out or "steps" in out:
            raise ConfigurationError(f"{path}: give either times or T/steps, not both")
    elif not ("T" in out and "steps" in out):
        raise ConfigurationError(f"{path}: need times, or T together with steps")
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment config (strict keys)."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config is not valid TOML: {exc}") from exc
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigurationError(f"unknown key {key}")

    has_components = "components" in raw
    if has_components and any(k in raw for k in _COMPONENT_KEYS):
        raise ConfigurationError(
            "give either top-level lambda/duration/rate/pulse or a components list")

    def parse_component(tbl, path):
        for key in tbl:
            if key not in _COMPONENT_KEYS:
                raise ConfigurationError(f"unknown key {path}.{key}")
        for key in _COMPONENT_KEYS:
            if key not in tbl:
                raise ConfigurationError(f"missing key {path}.{key}")
        return {
            "lambda": _coerce(tbl["lambda"], "float", f"{path}.lambda"),
            "duration": _parse_duration(tbl["duration"], f"{path}.duration"),
            "rate": _parse_rate(tbl["rate"], f"{path}.rate"),
            "pulse": _parse_pulse(tbl["pulse"], f"{path}.pulse"),
        }

    kwargs = {}
    if has_components:
        comps = raw["components"]
        if not isinstance(comps, list) or not comps:
            raise ConfigurationError("components must be a non-empty array of tables")
        kwargs["components"] = tuple(
            parse_component(c, f"components[{i}]") for i, c in enumerate(comps))
    else:
        single = parse_component({k: raw[k] for k in _COMPONENT_KEYS if k in raw}, "top level")
        kwargs.update(lam=single["lambda"], duration=single["duration"],
                      rate=single["rate"], pulse=single["pulse"])

    kwargs["regime"] = _parse_regime(raw.get("regime", {}), "regime")
    kwargs["grid"] = _parse_grid(raw.get("grid", {}), "grid")
    if "truncation" in raw:
        kwargs["truncation"] = _require(
            raw["truncation"], "truncation",
            {"u_min": ("float", False), "u_max": ("float", False),
             "variance_budget": ("float", False)})
        budget = kwargs["truncation"].get("variance_budget")
        if budget is not None and not budget > 0.0:
            raise ConfigurationError("truncation.variance_budget must be positive")
    if "seed" in raw:
        kwargs["seed"] = _coerce(raw["seed"], "int", "seed")
    if "paths" in raw:
        kwargs["paths"] = _coerce(raw["paths"], "int", "paths")
        if kwargs["paths"] < 1:
            raise ConfigurationError("paths must be >= 1")
    cfg = ExperimentConfig(**kwargs)
    resolve(cfg)  # full cross-validation happens during resolution
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise AssertionError("no boolean config values")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise AssertionError(f"unserialisable value {value!r}")


_SECTION_ORDER = {"duration": ("type", "b", "delta", "u_min", "u_max"),
                  "rate": ("type", "p", "r_plus", "r_minus", "mean", "std", "atoms"),
                  "pulse": ("type", "knots", "support"),
                  "regime": ("type", "n", "alpha"),
                  "grid": ("T", "steps", "times"),
                  "truncation": ("u_min", "u_max", "variance_budget")}


def _emit_table(name, table, lines):
    lines.append(f"[{name}]")
    order = _SECTION_ORDER[name.split(".")[-1]]
    for key in order:
        if key in table:
            lines.append(f"{key} = {_fmt(table[key])}")
    lines.append("")


def dumps_config(cfg: ExperimentConfig) -> str:
    """Canonical TOML text; parses back to an identical config."""
    lines = []
    if cfg.components is None:
        lines.append(f"lambda = {_fmt(cfg.lam)}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"paths = {cfg.paths}")
    lines.append("")
    _emit_table("regime", cfg.regime, lines)
    _emit_table("grid", cfg.grid, lines)
    if cfg.truncation is not None:
        _emit_table("truncation", cfg.truncation, lines)
    if cfg.components is None:
        for section in ("duration", "rate", "pulse"):
            _emit_table(section, getattr(cfg, section), lines)
    else:
        for comp in cfg.components:
            lines.append("[[components]]")
            lines.append(f"lambda = {_fmt(comp['lambda'])}")
            lines.append("")
            for section in ("duration", "rate", "pulse"):
                _emit_table(f"components.{section}", comp[section], lines)
    return "\n".join(lines)


def config_hash(cfg: ExperimentConfig) -> str:
    """Deterministic hash over semantically equal configs."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"),
                      default=lambda o: repr(o))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _build_duration(spec: dict, truncation: Optional[dict]) -> DurationLaw:
    if spec["type"] == "pareto":
        return ParetoDuration(spec["b"], spec["delta"])
    lo = spec.get("u_min")
    hi = spec.get("u_max")
    if truncation is not None:
        lo = truncation.get("u_min", lo)
        hi = truncation.get("u_max", hi)
    if lo is None or hi is None:
        raise ConfigurationError(
            "powerlaw duration needs u_min and u_max (in [duration] or [truncation])")
    return PowerLawInfinite(spec["delta"], lo, hi)


def _build_rate(spec: dict) -> RateLaw:
    if spec["type"] == "twopoint":
        return TwoPoint(spec["p"], spec["r_plus"], spec["r_minus"])
    if spec["type"] == "gaussian":
        return GaussianRate(spec["mean"], spec["std"])
    return DiscreteRate(tuple((v, p) for v, p in spec["atoms"]))


def _build_pulse(spec: dict) -> Pulse:
    if spec["type"] == "linear_plateau":
        return linear_plateau()
    if spec["type"] == "triangle":
        return triangle()
    return custom_piecewise([tuple(k) for k in spec["knots"]], spec["support"])


def _build_regime(spec: dict) -> ScalingRegime:
    kind = spec["type"]
    if kind == "none":
        return Unscaled()
    if kind == "thm1":
        return Intermediate(spec["n"])
    if kind == "thm2":
        return FastProbability(spec["n"])
    if kind == "thm3":
        return FastSimple(spec["n"])
    if kind == "thm4":
        return SlowProbability(spec["n"], spec["alpha"])
    return SlowSimple(spec["n"])


def _build_grid(spec: dict) -> PathGrid:
    if "times" in spec:
        return PathGrid(tuple(spec["times"]))
    return uniform_grid(spec["T"], spec["steps"])


def resolve(cfg: ExperimentConfig) -> RunSpec:
    """Build the executable run spec, running all cross-validation."""
    regime = _build_regime(cfg.regime)
    grid = _build_grid(cfg.grid)
    raw_components = (cfg.components if cfg.components is not None
                      else ({"lambda": cfg.lam, "duration": cfg.duration,
                             "rate": cfg.rate, "pulse": cfg.pulse},))
    components = []
    for spec in raw_components:
        duration = _build_duration(spec["duration"], cfg.truncation)
        rate = _build_rate(spec["rate"])
        pulse = _build_pulse(spec["pulse"])
        _check_pulse_admissible(pulse, duration, regime)
        components.append(Component(spec["lambda"], duration, rate, pulse))
    run = RunSpec(tuple(components), regime, grid)
    _check_truncation_budget(cfg, run)
    return run


def _check_pulse_admissible(pulse: Pulse, duration: DurationLaw, regime) -> None:
    if isinstance(regime, (SlowProbability, SlowSimple)) and pulse.plateau_value != 1.0:
        raise ConfigurationError("stable regimes require a plateau pulse with f(1) = 1")
    if isinstance(regime, FastSimple) and duration.delta >= 2.0 \
            and pulse.plateau_value != 0.0:
        raise ConfigurationError(
            "fast simple regime with delta >= 2 requires a compact pulse")


def _check_truncation_budget(cfg: ExperimentConfig, run: RunSpec) -> None:
    budget = (cfg.truncation or {}).get("variance_budget")
    if budget is None:
        return
    for comp in run.components:
        if not isinstance(comp.duration, PowerLawInfinite):
            continue
        lambda_n, law = intensity(run.regime, comp.lam, comp.duration)
        a = rate_multiplier(run.regime, comp.duration.delta)
        discarded = truncation_variance(comp.pulse, law.delta, lambda_n,
                                        a * a * rate_second_moment(comp.rate),
                                        run.grid.horizon, law.u_min)
        if discarded > budget:
            raise ConfigurationError(
                f"truncation variance {discarded:.3g} exceeds budget {budget:.3g}; "
                "decrease u_min or raise the budget")
