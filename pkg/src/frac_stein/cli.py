"""Command-line entry point.

Subcommands:

* ``run CONFIG OUTDIR``      execute a JSON experiment suite,
* ``bounds``                 print a lower bound as CSV,
* ``divergence``             tabulate discrete risks across doubling grids,
* ``stein``                  run the shrinkage-estimator experiment.

Exit codes: 0 success, 2 configuration/validation error, 3 numeric error.
The ``FRAC_STEIN_THREADS`` environment variable caps worker threads and never
changes numeric output.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import bounds as bd
from . import report
from .config import ConfigError, build_experiments, load_config
from .energies import EnergySpec, MeasureSpec
from .montecarlo import (
    divergence_probe,
    estimate_risk,
    super_efficiency_experiment,
    worker_count,
)
from .processes import DriftSpec, IntensitySpec, NumericalError, uniform_grid
from .stein import SteinConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parse_drift(text: str) -> DriftSpec:
    kind, _, arg = text.partition(":")
    if kind == "zero":
        return DriftSpec.zero()
    if kind == "constant":
        return DriftSpec.constant_rate(float(arg) if arg else 1.0)
    if kind == "linear":
        return DriftSpec.linear_rate(float(arg) if arg else 1.0)
    if kind == "sine":
        return DriftSpec.sine(amplitude=float(arg) if arg else 1.0)
    raise argparse.ArgumentTypeError(f"unknown drift form: {text!r}")


def _parse_measure(text: str) -> MeasureSpec:
    if text == "lebesgue":
        return MeasureSpec.lebesgue()
    atoms = []
    for chunk in text.split(","):
        t, _, w = chunk.partition(":")
        atoms.append((float(t), float(w) if w else 1.0))
    return MeasureSpec.discrete(atoms)


def _parse_resolutions(text: str) -> list[int]:
    return [int(chunk) for chunk in text.split(",")]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frac-stein",
        description="risk experiments for drift/intensity estimation under fractional energies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a JSON experiment suite")
    run.add_argument("config", help="path to the JSON configuration")
    run.add_argument("outdir", help="output directory")
    run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    run.add_argument("--workers", type=int, default=None, help="worker threads")

    bounds_p = sub.add_parser("bounds", help="print a closed-form lower bound as CSV")
    bounds_p.add_argument("--model", choices=["gaussian", "cox"], required=True)
    bounds_p.add_argument("--energy", choices=["l2", "wfrac"], default="wfrac")
    bounds_p.add_argument("--alpha", type=float, default=None)
    bounds_p.add_argument("--p", type=float, default=2.0)
    bounds_p.add_argument("--T", type=float, default=1.0)
    bounds_p.add_argument("--mu", type=_parse_measure, default=MeasureSpec.lebesgue(),
                          help="lebesgue or t:w[,t:w...]")
    bounds_p.add_argument("--mean-intensity", type=float, default=1.0,
                          help="constant mean intensity for the cox model")

    div = sub.add_parser("divergence", help="discrete risk across doubling resolutions")
    div.add_argument("--model", choices=["gaussian", "cox", "deterministic"], default="gaussian")
    div.add_argument("--energy", choices=["h1", "wfrac"], default="h1")
    div.add_argument("--alpha", type=float, default=0.6)
    div.add_argument("--p", type=float, default=2.0)
    div.add_argument("--regime", choices=["piecewise-constant", "piecewise-linear"],
                     default="piecewise-linear")
    div.add_argument("--resolutions", type=_parse_resolutions, default=[64, 128, 256])
    div.add_argument("--reps", type=int, default=1000)
    div.add_argument("--seed", type=int, default=0)
    div.add_argument("--T", type=float, default=1.0)
    div.add_argument("--drift", type=_parse_drift, default=DriftSpec.zero())
    div.add_argument("--intensity-rate", type=float, default=1.0)
    div.add_argument("--out", default=None, help="also write CSV/PNG under this directory")

    stein_p = sub.add_parser("stein", help="super-efficiency experiment")
    stein_p.add_argument("--n", type=int, default=8)
    stein_p.add_argument("--a", type=float, default=-1.0)
    stein_p.add_argument("--alpha", type=float, default=0.25)
    stein_p.add_argument("--T", type=float, default=1.0)
    stein_p.add_argument("--m", type=int, default=1024)
    stein_p.add_argument("--reps", type=int, default=10000)
    stein_p.add_argument("--seed", type=int, default=0)
    stein_p.add_argument("--drift", action="append", type=_parse_drift, default=None,
                         help="zero | constant:c | linear:c | sine[:amp] (repeatable)")
    stein_p.add_argument("--workers", type=int, default=None)
    stein_p.add_argument("--out", default=None, help="also write CSV/PNG under this directory")
    return parser


def _cmd_run(args) -> int:
    try:
        document = load_config(args.config)
        experiments = build_experiments(document)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    entries = []
    try:
        for config_entry, spec in experiments:
            entries.append((config_entry, estimate_risk(spec, args.workers)))
    except NumericalError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    report.write_run_outputs(args.outdir, entries, figures=not args.no_figures)
    for _, risk in entries:
        print(
            f"{risk.label}: estimate={risk.estimate:.6g} stderr={risk.stderr:.3g} "
            f"bound={risk.bound if math.isfinite(risk.bound) else 'inf'}"
        )
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        if args.model == "gaussian":
            if args.energy == "l2":
                value = bd.l2_bound_gaussian(args.mu, args.T)
            else:
                if args.alpha is None:
                    raise ValueError("--alpha is required for wfrac bounds")
                if args.p == 2.0:
                    value = bd.w_alpha2_bound_gaussian(args.T, args.alpha)
                else:
                    value = bd.w_alphap_bound_gaussian(args.T, args.alpha, args.p)
        else:
            intensity = IntensitySpec(DriftSpec.constant_rate(args.mean_intensity))
            if args.energy == "l2":
                value = bd.l2_bound_cox(intensity, args.mu, args.T)
            else:
                if args.alpha is None:
                    raise ValueError("--alpha is required for wfrac bounds")
                if args.p != 2.0:
                    raise ValueError("counting-model bounds support p = 2 only")
                value = bd.w_alpha2_bound_cox(intensity, args.T, args.alpha)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    mu_label = "lebesgue" if args.mu.kind == "lebesgue" else "discrete"
    print("model,energy,alpha,p,T,mu,bound")
    alpha = "" if args.alpha is None else f"{args.alpha:g}"
    formatted = "inf" if math.isinf(value) else f"{value:.6f}"
    print(f"{args.model},{args.energy},{alpha},{args.p:g},{args.T:g},{mu_label},{formatted}")
    return EXIT_OK


def _cmd_divergence(args) -> int:
    if args.energy == "h1":
        energy = EnergySpec("h1")
        label = "h1"
    else:
        energy = EnergySpec("wfrac", alpha=args.alpha, p=args.p, regime=args.regime)
        label = f"w{args.alpha:g}_{args.p:g}"
    intensity = None
    if args.model == "cox":
        intensity = IntensitySpec(DriftSpec.constant_rate(args.intensity_rate))
    try:
        rows = divergence_probe(
            args.model, energy, args.resolutions, args.reps,
            seed=args.seed, horizon=args.T, drift=args.drift, intensity=intensity,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print("m,mean,stderr")
    for row in rows:
        print(f"{row.cells},{row.mean:.17g},{row.stderr:.17g}")
    if args.out:
        report.write_divergence_outputs(args.out, rows, label)
    return EXIT_OK


def _cmd_stein(args) -> int:
    drifts = args.drift or [DriftSpec.zero(), DriftSpec.constant_rate(0.5)]
    try:
        config = SteinConfig.uniform(args.T, args.n, args.a, args.alpha)
        if args.m % args.n != 0:
            raise ValueError("m must be a multiple of n (coarse nodes on the grid)")
        grid = uniform_grid(args.T, args.m)
        reports = super_efficiency_experiment(
            config, drifts, grid, args.reps, args.seed, args.workers
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(
        "experiment,estimate,stderr,corrected,predicted,predicted_stderr,bound,"
        "super_efficient,matches_prediction"
    )
    for r in reports:
        print(
            f"{r.label},{r.risk.estimate:.17g},{r.risk.stderr:.17g},"
            f"{r.corrected_estimate:.17g},{r.predicted.value:.17g},"
            f"{r.predicted.stderr:.17g},{r.bound:.17g},"
            f"{str(r.super_efficient).lower()},{str(r.matches_prediction).lower()}"
        )
    if args.out:
        report.write_stein_outputs(args.out, reports)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "bounds":
        return _cmd_bounds(args)
    if args.command == "divergence":
        return _cmd_divergence(args)
    return _cmd_stein(args)


if __name__ == "__main__":
    sys.exit(main())
