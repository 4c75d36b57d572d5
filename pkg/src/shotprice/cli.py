"""Command-line interface: simulate, converge, analytic, selftest."""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ShotPriceError
from .harness import CONVERGE_TARGETS, run_converge, run_selftest, run_simulate


def _parse_params(pairs):
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise SystemExit(f"--params entries must look like key=value, got {pair!r}")
        key, val = pair.split("=", 1)
        out[key] = val
    return out


def _analytic(args) -> int:
    from . import limits
    from .measures import TwoPoint
    from .pulses import linear_plateau, triangle

    p = _parse_params(args.params)

    def num(key, default=None):
        if key in p:
            return float(p[key])
        if default is None:
            raise SystemExit(f"analytic --what {args.what} needs --params {key}=...")
        return default

    def pulse():
        name = p.get("pulse", "linear_plateau")
        if name == "triangle":
            return triangle()
        if name == "linear_plateau":
            return linear_plateau()
        raise SystemExit("pulse must be linear_plateau or triangle")

    rows = []
    if args.what == "sigma2":
        rows.append(("sigma2", limits.fbm_variance(
            pulse(), num("delta"), num("lambda", 1.0), num("er2", 1.0))))
    elif args.what == "hurst":
        rows.append(("hurst", limits.hurst(num("delta"))))
    elif args.what == "stable-scale":
        rows.append(("stable_scale", limits.stable_scale(num("delta"))))
    elif args.what == "stable-model":
        law = TwoPoint(num("p", 0.5), num("r_plus", 1.0), num("r_minus", 1.0))
        model = limits.stable_model(num("delta"), num("lambda", 1.0), law)
        rows += [("c1", model.c1), ("c2", model.c2), ("beta", model.beta),
                 ("base_scale", model.base_scale), ("total_scale", model.total_scale)]
    elif args.what == "covariance":
        model = limits.FbmModel(num("sigma2"), num("hurst"))
        rows.append(("covariance", limits.fbm_covariance(model, num("t1"), num("t2"))))
    elif args.what == "lemma1":
        kappa, delta, t = num("kappa"), num("delta"), num("t", 1.0)
        rows.append(("lemma1_bound", limits.lemma1_bound(num("m", 1.0), kappa, delta, t)))
        rows.append(("lemma1_quadrature", limits.lemma1_integral(pulse(), kappa, delta, t)))
    elif args.what == "lemma2":
        val = limits.lemma2_value(num("c"), num("x"))
        rows += [("lemma2_re", val.real), ("lemma2_im", val.imag)]
    print("name,value")
    for name, value in rows:
        print(f"{name},{value!r}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shotprice",
        description="Poisson shot-noise price process simulator and limit verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate an ensemble and write paths.csv")
    sim.add_argument("--config", required=True)
    sim.add_argument("--paths", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", required=True)

    conv = sub.add_parser("converge", help="convergence sweep over n")
    conv.add_argument("--config", required=True)
    conv.add_argument("--n-list", required=True,
                      help="comma-separated increasing scaling factors, e.g. 4,16,64")
    conv.add_argument("--target", required=True, choices=CONVERGE_TARGETS)
    conv.add_argument("--paths", type=int)
    conv.add_argument("--seed", type=int)
    conv.add_argument("--out", required=True)

    ana = sub.add_parser("analytic", help="print analytic values as labeled CSV rows")
    ana.add_argument("--what", required=True,
                     choices=["sigma2", "hurst", "stable-scale", "stable-model",
                              "covariance", "lemma1", "lemma2"])
    ana.add_argument("--params", nargs="*", metavar="key=value")

    sub.add_parser("selftest", help="run the analytic invariant suite")

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            record = run_simulate(load_config(args.config), args.out,
                                  paths=args.paths, seed=args.seed)
            for name, (value, stderr) in record.metrics.items():
                print(f"{name}={value!r} (stderr {stderr!r})")
            return 0
        if args.command == "converge":
            n_list = [int(tok) for tok in args.n_list.split(",") if tok]
            record = run_converge(load_config(args.config), n_list, args.target,
                                  args.out, paths=args.paths, seed=args.seed)
            print(f"summary written to {record.artifacts['summary']}")
            return 0
        if args.command == "analytic":
            return _analytic(args)
        checks = run_selftest()
        return 0 if all(ok for _, ok, _ in checks) else 1
    except ShotPriceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
