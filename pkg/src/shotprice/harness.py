"""Experiment orchestration: simulate runs, convergence sweeps, selftest.

Output files are versioned CSVs (leading ``# schema=1`` comment) plus a
``run.meta`` key=value file carrying the reproducibility record: config
hash, seed, substream scheme, contributing intensities and truncation
diagnostics.  Every byte of output is determined by (config, seed).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import limits
from .config import ExperimentConfig, config_hash, resolve
from .errors import ConfigurationError
from .estimators import empirical_cf, estimate_hurst, estimate_stable_index
from .measures import rate_second_moment
from .process import price_path, simulate_ensemble
from .pulses import linear_plateau, triangle
from .regimes import (FastProbability, FastSimple, Intermediate,
                      SlowProbability, SlowSimple)
from .sampler import compensator_value, compensator_value_quadrature

logger = logging.getLogger(__name__)

SCHEMA_LINE = "# schema=1"

CONVERGE_TARGETS = ("hurst", "stable_index", "variance", "ecf")


@dataclass(frozen=True)
class RunRecord:
    config_hash: str
    seed: int
    metrics: dict  # name -> (value, stderr)
    artifacts: dict  # name -> path
    wall_time: float


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [SCHEMA_LINE, header]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_meta(path: Path, entries: dict) -> None:
    lines = [f"{k}={v}" for k, v in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _meta_entries(cfg: ExperimentConfig, ensemble_meta: dict, wall: float) -> dict:
    entries = {
        "schema": 1,
        "config_hash": config_hash(cfg),
        "seed": ensemble_meta["seed"],
        "paths": ensemble_meta["paths"],
        "regime": ensemble_meta["regime"],
        "substreams": ensemble_meta["substreams"],
        "wall_time_s": f"{wall:.3f}",
    }
    for i, comp in enumerate(ensemble_meta["components"]):
        for key, val in comp.items():
            entries[f"component{i}.{key}"] = val
    budget = (cfg.truncation or {}).get("variance_budget")
    if budget is not None:
        entries["variance_budget"] = budget
    return entries


def _variance_metrics(z: np.ndarray) -> dict:
    m = len(z)
    mean = float(z.mean())
    var = float(z.var(ddof=1))
    m4 = float(np.mean((z - mean) ** 4))
    se_mean = float(z.std(ddof=1) / math.sqrt(m))
    se_var = math.sqrt(max(m4 - var * var * (m - 3) / (m - 1), 0.0) / m)
    return {"mean_Z1": (mean, se_mean), "var_Z1": (var, se_var)}


def run_simulate(cfg: ExperimentConfig, out_dir, paths: int | None = None,
                 seed: int | None = None) -> RunRecord:
    """Simulate the configured ensemble and persist paths plus metrics."""
    if paths is not None:
        cfg = replace(cfg, paths=paths)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    run = resolve(cfg)
    ens = simulate_ensemble(run, cfg.paths, cfg.seed)
    y = price_path(ens.values)
    rows = []
    for pid in range(ens.n_paths):
        for j, t in enumerate(ens.times):
            rows.append((pid, float(t), float(ens.values[pid, j]), float(y[pid, j])))
    _write_csv(out / "paths.csv", "path_id,t,z,y", rows)

    # metrics are taken at t = 1 when the grid contains it, else at the horizon
    t_metric = 1.0 if any(abs(t - 1.0) < 1e-12 for t in ens.times) else float(ens.times[-1])
    metrics = _variance_metrics(ens.at_time(t_metric))
    _write_csv(out / "estimates.csv", "name,value,stderr",
               [(k, float(v), float(se)) for k, (v, se) in metrics.items()])
    wall = time.perf_counter() - t0
    _write_meta(out / "run.meta", _meta_entries(cfg, ens.metadata, wall))
    return RunRecord(config_hash(cfg), cfg.seed, metrics,
                     {"paths": str(out / "paths.csv"),
                      "estimates": str(out / "estimates.csv"),
                      "meta": str(out / "run.meta")}, wall)


def _first_component(run):
    return run.components[0]


def _limit_cf(run, xi, settings=limits.DEFAULT_SETTINGS):
    """Characteristic function of the regime's limit law at t = 1."""
    comp = _first_component(run)
    delta = comp.duration.delta
    regime = run.regime
    if isinstance(regime, Intermediate):
        return limits.prelimit_char_function(
            comp.pulse, comp.lam, limits.LimitingMeasure(delta), comp.rate,
            1.0, 1.0, xi, settings, compensated=True)
    if isinstance(regime, (SlowProbability, SlowSimple)):
        model = limits.stable_model(delta, comp.lam, comp.rate)
        return limits.stable_char_function(model, 1.0, xi)
    if isinstance(regime, (FastProbability, FastSimple)):
        sigma2 = limits.fbm_variance(comp.pulse, delta, comp.lam,
                                     rate_second_moment(comp.rate), settings)
        return np.exp(-0.5 * sigma2 * np.asarray(xi) ** 2)
    raise ConfigurationError("ecf target needs a limit-theorem regime")


def _limit_variance(run) -> float:
    total = 0.0
    for comp in run.components:
        total += limits.fbm_variance(comp.pulse, comp.duration.delta, comp.lam,
                                     rate_second_moment(comp.rate))
    return total


def run_converge(cfg: ExperimentConfig, n_list, target: str, out_dir,
                 paths: int | None = None, seed: int | None = None) -> RunRecord:
    """Convergence sweep over n for one target metric.

    Writes one summary row (n, estimate, stderr, limit, abs_gap) per n and
    soft-checks that the gap at the largest n does not exceed the gap at
    the smallest (warning only).  All n reuse the same master seed, so
    path substreams are shared across the sweep.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigurationError("n_list must be increasing with at least 2 entries")
    if target not in CONVERGE_TARGETS:
        raise ConfigurationError(f"target must be one of {CONVERGE_TARGETS}")
    if cfg.regime["type"] == "none":
        raise ConfigurationError("convergence sweeps need a limit-theorem regime")
    if paths is not None:
        cfg = replace(cfg, paths=paths)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    xi_grid = np.geomspace(0.1, 3.0, 25)
    rows = []
    ecf_rows = []
    for n in n_list:
        cfg_n = replace(cfg, regime={**cfg.regime, "n": n})
        run = resolve(cfg_n)
        ens = simulate_ensemble(run, cfg_n.paths, cfg_n.seed)
        z1 = ens.at_time(1.0 if any(abs(t - 1.0) < 1e-12 for t in ens.times)
                         else float(ens.times[-1]))
        if target == "hurst":
            est = estimate_hurst(ens)
            value, stderr = est.h_hat, est.stderr
            limit = limits.hurst(_first_component(run).duration.delta)
        elif target == "stable_index":
            est = estimate_stable_index(z1)
            value, stderr = est.delta_hat, est.stderr_delta
            limit = _first_component(run).duration.delta
        elif target == "variance":
            metrics = _variance_metrics(z1)
            value, stderr = metrics["var_Z1"]
            limit = _limit_variance(run)
        else:  # ecf
            curve = empirical_cf(z1, xi_grid)
            theory = _limit_cf(run, xi_grid)
            value = float(np.max(np.abs(curve.phi_hat - theory)))
            stderr = 1.0 / math.sqrt(curve.n_samples)
            limit = 0.0
            if n == n_list[-1]:
                ecf_rows = [(float(x), float(p.real), float(p.imag),
                             float(th.real), float(th.imag))
                            for x, p, th in zip(xi_grid, curve.phi_hat, theory)]
        rows.append((n, float(value), float(stderr), float(limit),
                     float(abs(value - limit))))

    monotone_ok = rows[-1][4] <= rows[0][4]
    if not monotone_ok:
        logger.warning("convergence gap did not shrink: %g at n=%d vs %g at n=%d",
                       rows[-1][4], n_list[-1], rows[0][4], n_list[0])
    _write_csv(out / "summary.csv", "n,estimate,stderr,limit,abs_gap", rows)
    artifacts = {"summary": str(out / "summary.csv")}
    if ecf_rows:
        _write_csv(out / "ecf.csv", "xi,re_hat,im_hat,re_theory,im_theory", ecf_rows)
        artifacts["ecf"] = str(out / "ecf.csv")
    wall = time.perf_counter() - t0
    meta = {"schema": 1, "config_hash": config_hash(cfg), "seed": cfg.seed,
            "paths": cfg.paths, "target": target,
            "n_list": ",".join(str(n) for n in n_list),
            "monotone_gap": int(monotone_ok), "wall_time_s": f"{wall:.3f}"}
    _write_meta(out / "run.meta", meta)
    artifacts["meta"] = str(out / "run.meta")
    metrics = {f"gap_n{n}": (gap, stderr) for (n, _, stderr, _, gap) in rows}
    return RunRecord(config_hash(cfg), cfg.seed, metrics, artifacts, wall)


def run_selftest(stream=None) -> list[tuple[str, bool, str]]:
    """Analytic invariant suite; prints one PASS/FAIL line per check."""
    import sys

    stream = stream or sys.stdout
    checks = []

    def check(name, fn):
        try:
            detail, ok = fn()
        except Exception as exc:  # report, never abort the suite
            detail, ok = f"raised {type(exc).__name__}: {exc}", False
        checks.append((name, ok, detail))
        stream.write(f"{'PASS' if ok else 'FAIL'} {name} ({detail})\n")

    def gamma_identities():
        errs = [abs(math.gamma(0.5) - math.sqrt(math.pi)),
                abs(math.gamma(1.0) - 1.0),
                abs(math.gamma(0.3) * math.gamma(0.7) - math.pi / math.sin(0.3 * math.pi))]
        worst = max(errs)
        return f"max error {worst:.2e}", worst < 1e-12

    def sigma2_closed_form():
        worst = 0.0
        for delta in (1.2, 1.5, 1.8):
            got = limits.fbm_variance(linear_plateau(), delta, 1.0, 1.0)
            want = 1.0 / ((2.0 - delta) * (3.0 - delta))
            worst = max(worst, abs(got - want) / want)
        return f"max rel error {worst:.2e}", worst < 1e-8

    def lemma1_check():
        quad = limits.lemma1_integral(linear_plateau(), 1.0, 1.5, 1.0)
        bound = limits.lemma1_bound(1.0, 1.0, 1.5, 1.0)
        return f"quad {quad:.6f} vs bound {bound:.6f}", quad <= bound * (1.0 + 1e-9)

    def lemma2_check():
        dists = []
        for x in (1e2, 1e4, 1e6):
            val = limits.lemma2_value(1.0, x)
            if abs(val + 0.5) > 1.0 / (3.0 * x):
                return f"margin violated at x={x:g}", False
            dists.append(abs(val + 0.5))
        ok = dists[0] > dists[1] > dists[2]
        return f"distances {dists[0]:.1e} > {dists[1]:.1e} > {dists[2]:.1e}", ok

    def stable_scale_check():
        got = limits.stable_scale(1.5)
        # closed form with Gamma(1/2) = sqrt(pi) and cos(3 pi/4) = -sqrt(2)/2
        want = (math.sqrt(2.0 * math.pi) / 0.75) ** (2.0 / 3.0)
        ok = abs(got - want) < 1e-12 and all(
            limits.stable_scale(d) > 0.0 for d in (1.1, 1.5, 1.9))
        return f"sigma(1.5) = {got:.6f}", ok

    def stable_sampler_check():
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(20240917)))
        model = limits.stable_model(1.5, 1.0, _selftest_rate())
        draws = limits.sample_stable(model, 1.0, rng, 40000)
        xi = np.geomspace(0.1, 3.0, 20)
        gap = float(np.max(np.abs(empirical_cf(draws, xi).phi_hat
                                  - limits.stable_char_function(model, 1.0, xi))))
        return f"ECF sup gap {gap:.4f}", gap < 0.03

    def covariance_psd():
        model = limits.FbmModel(1.0, 0.75)
        ts = [0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 1.5, 2.0]
        mat = [[limits.fbm_covariance(model, a, b) for b in ts] for a in ts]
        lo = float(np.min(np.linalg.eigvalsh(np.array(mat))))
        return f"min eigenvalue {lo:.2e}", lo >= -1e-10

    def compensator_cross_check():
        from .measures import ParetoDuration

        law = ParetoDuration(1.0, 1.5)
        worst = 0.0
        for pulse in (linear_plateau(), triangle()):
            closed = compensator_value(pulse, 2.0, law, 0.5, 1.0, 1.7)
            quad = compensator_value_quadrature(pulse, 2.0, law, 0.5, 1.0, 1.7)
            worst = max(worst, abs(closed - quad))
        return f"max abs gap {worst:.2e}", worst < 1e-8

    check("gamma_identities", gamma_identities)
    check("sigma2_closed_form", sigma2_closed_form)
    check("lemma1_quadrature_vs_bound", lemma1_check)
    check("lemma2_sequence", lemma2_check)
    check("stable_scale", stable_scale_check)
    check("stable_sampler_ecf", stable_sampler_check)
    check("fbm_covariance_psd", covariance_psd)
    check("compensator_closed_vs_quadrature", compensator_cross_check)
    return checks


def _selftest_rate():
    from .measures import TwoPoint

    return TwoPoint(0.75, 1.0, 1.0)
