"""Command-line interface: simulate, estimate, test, study, plotdata."""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import io
from .estimators import (KernelSpec, edge_corrected_covariance,
                         naive_covariance, smoothed_covariance)
from .geometry import ObservationWindow
from .gof import mgm_test, tmd_test
from .marks import (AngularBinSet, GaussCovariance2, axial_pn2_bin_probs,
                    uniform_bin_probs)
from .models import BooleanCoxConfig, MamConfig, realize
from .study import StudyConfig, run_study

_MODEL_DEFAULTS = {
    "kind": "mam",
    "intensity": 3125.0 / 3000.0 ** 2,
    "rho": 0.0,
    "kappa11": 1.0,
    "kappa22": 1.0,
    "kappa12": 0.0,
    "window": [-1500.0, -1500.0, 1500.0, 1500.0],
    "seed": 0,
    # boolean-cox model
    "germ_intensity": 4e-4,
    "grain_radius": 20.0,
    "boundary_intensity": 0.05,
}

_BINS_DEFAULTS = {"ell": 8, "span": "axial"}


def _load_toml(path) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _window_from_corners(corners) -> ObservationWindow:
    x0, y0, x1, y1 = (float(v) for v in corners)
    return ObservationWindow((x0, y0), (x1, y1))


def _parse_window(text) -> ObservationWindow:
    return _window_from_corners(text.split(","))


def _bins_from_config(section) -> AngularBinSet:
    opts = {**_BINS_DEFAULTS, **section}
    span = np.pi if opts["span"] == "axial" else 2.0 * np.pi
    return AngularBinSet(int(opts["ell"]), span)


def _model_config(section, seed_override=None):
    opts = {**_MODEL_DEFAULTS, **section}
    window = _window_from_corners(opts["window"])
    seed = int(seed_override if seed_override is not None else opts["seed"])
    if opts["kind"] == "mam":
        kappa = GaussCovariance2(opts["kappa11"], opts["kappa22"], opts["kappa12"])
        return MamConfig(intensity=float(opts["intensity"]), rho=float(opts["rho"]),
                         kappa=kappa, window=window, seed=seed)
    if opts["kind"] == "booleancox":
        radius = opts["grain_radius"]
        if isinstance(radius, list):
            radius = (float(radius[0]), float(radius[1]))
        else:
            radius = float(radius)
        return BooleanCoxConfig(germ_intensity=float(opts["germ_intensity"]),
                                grain_radius=radius,
                                boundary_intensity=float(opts["boundary_intensity"]),
                                window=window, seed=seed)
    raise SystemExit(f"unknown model kind {opts['kind']!r}")


def _p0_for(args, bins):
    if args.p0 == "uniform":
        return uniform_bin_probs(bins)
    kappa = GaussCovariance2(args.kappa11, args.kappa22, args.kappa12)
    return axial_pn2_bin_probs(kappa, bins)


def _add_bin_args(sub):
    sub.add_argument("--ell", type=int, default=8, help="number of test bins")
    sub.add_argument("--span", choices=("axial", "circular"), default="axial")


def _add_p0_args(sub):
    sub.add_argument("--p0", choices=("uniform", "pn2"), default="uniform",
                     help="hypothesized mark distribution")
    sub.add_argument("--kappa11", type=float, default=1.0)
    sub.add_argument("--kappa22", type=float, default=1.0)
    sub.add_argument("--kappa12", type=float, default=0.0)


def _bins_from_args(args) -> AngularBinSet:
    span = np.pi if args.span == "axial" else 2.0 * np.pi
    return AngularBinSet(args.ell, span)


def _cmd_simulate(args):
    section = dict(_load_toml(args.config).get("model", {}))
    if args.model is not None:
        section["kind"] = args.model
    config = _model_config(section, seed_override=args.seed)
    pattern = realize(config)
    kind = "mam" if isinstance(config, MamConfig) else "booleancox"
    io.write_pattern_csv(args.out, pattern, seed=config.seed,
                         extra={"model": kind, "config": io.config_digest(config),
                                "npoints": len(pattern)})
    print(f"wrote {len(pattern)} points to {args.out}")


def _cmd_estimate(args):
    pattern = io.read_pattern_csv(args.pattern)
    window = _parse_window(args.window)
    bins = _bins_from_args(args)
    p0 = _p0_for(args, bins)
    if args.estimator == "s1":
        estimate = edge_corrected_covariance(pattern, window, bins, p0)
    elif args.estimator == "s2":
        estimate = naive_covariance(pattern, window, bins, p0)
    else:
        estimate = smoothed_covariance(pattern, window, bins, p0, c=args.c)
    io.write_matrix_csv(args.out, estimate)
    print(f"wrote {args.estimator} covariance ({bins.ell}x{bins.ell}) to {args.out}")


def _cmd_test(args):
    pattern = io.read_pattern_csv(args.pattern)
    window = _parse_window(args.window)
    bins = _bins_from_args(args)
    p0 = _p0_for(args, bins)
    if args.mode == "tmd":
        report = tmd_test(pattern, window, bins, p0, c=args.c, alpha=args.alpha)
    else:
        if args.sigma0 is None:
            raise SystemExit("mgm test needs --sigma0 with a covariance CSV")
        sigma0 = io.read_matrix_csv(args.sigma0)
        report = mgm_test(pattern, window, bins, p0, sigma0, alpha=args.alpha)
    io.write_report_csv(args.out, report)
    decision = {True: "reject", False: "accept", None: "undetermined"}[report.reject]
    print(f"{report.test}: statistic={report.statistic:.6g} "
          f"critical={report.critical_value:.6g} -> {decision}")


def _cmd_study(args):
    raw = _load_toml(args.config).get("study", {})
    if "kernel" in raw:
        raw["kernel"] = KernelSpec(**raw["kernel"])
    for name in ("expected_points", "rho_grid", "kappa12_grid", "alpha_grid",
                 "c_grid"):
        if name in raw:
            raw[name] = tuple(float(v) for v in raw[name])
    config = StudyConfig(**raw)
    if args.full:
        config = dataclasses.replace(config, n_reps=10000, mc_reps=10000)
    if args.jobs is not None:
        config = dataclasses.replace(config, n_jobs=args.jobs)
    table = run_study(config)
    table.to_csv(args.out)
    print(f"wrote {len(table.rows)} rows to {args.out}")


def _cmd_plotdata(args):
    meta, rows = io.read_rows_csv(args.table)
    x_field = "expected_points" if args.axis == "points" else "rho"
    series_field = "rho" if args.axis == "points" else "expected_points"
    out_fields = ("test", "kappa12", "alpha", "c", series_field, x_field,
                  "rate", "se")
    def sort_key(row):
        return (row["test"], float(row["kappa12"]), float(row["alpha"]),
                row["c"], float(row[series_field]), float(row[x_field]))
    picked = [{f: row[f] for f in out_fields} for row in sorted(rows, key=sort_key)]
    io.write_rows_csv(args.out, out_fields, picked,
                      seed=meta.get("seed"), extra={"source": args.table})
    print(f"wrote {len(picked)} curve points to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palmstat",
        description="Simulate marked point processes and test their mark distribution")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one pattern to CSV")
    p.add_argument("--model", choices=("mam", "booleancox"))
    p.add_argument("--config", help="TOML file with a [model] section")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the covariance matrix")
    p.add_argument("--pattern", required=True)
    p.add_argument("--window", required=True, help='"x0,y0,x1,y1"')
    _add_bin_args(p)
    p.add_argument("--estimator", choices=("s1", "s2", "s3"), required=True)
    p.add_argument("--c", type=float, default=50.0)
    _add_p0_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("test", help="run a goodness-of-fit test")
    p.add_argument("--mode", choices=("tmd", "mgm"), required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--window", required=True, help='"x0,y0,x1,y1"')
    _add_bin_args(p)
    _add_p0_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--c", type=float, default=50.0)
    p.add_argument("--sigma0", help="covariance CSV for the mgm test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("study", help="run a Monte-Carlo error study")
    p.add_argument("--config", help="TOML file with a [study] section")
    p.add_argument("--out", required=True)
    p.add_argument("--full", action="store_true",
                   help="full-scale replication counts (10000)")
    p.add_argument("--jobs", type=int, help="parallel workers")
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("plotdata", help="reshape an error table for plotting")
    p.add_argument("--table", required=True)
    p.add_argument("--axis", choices=("points", "rho"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
