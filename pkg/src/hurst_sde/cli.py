"""Command line interface.

Subcommands: ``gen`` (fBm path to CSV), ``simulate`` (model trajectory to
CSV plus JSON sidecar), ``estimate`` (CSV to a JSON estimation report), and
``mc`` (experiment config file to report files).  Exit codes: 0 success,
1 usage error, 2 data or domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .estimators import estimate_h1, estimate_h2
from .exceptions import HurstSDEError
from .fbm import SamplePath, generate_fbm, generate_fbm_cholesky
from .harness import ExperimentConfig, run_experiment
from .io import NESTED_HEADER, read_nested, read_path_csv, write_estimation_report, write_nested, write_path_csv
from .models import ModelSpec, sample_nested

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hurst-sde",
        description="Simulate fBm-driven SDE paths and estimate the Hurst index "
        "from second-order quadratic variations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="sample an fBm path and write it as t,value CSV")
    gen.add_argument("--hurst", type=float, required=True, help="Hurst index in (0, 1)")
    gen.add_argument("--n", type=int, required=True, help="number of grid steps")
    gen.add_argument("--t", type=float, default=1.0, help="time horizon T (default 1)")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="output CSV file")
    gen.add_argument(
        "--method",
        choices=["circulant", "cholesky"],
        default="circulant",
        help="generator (default circulant embedding)",
    )
    gen.set_defaults(func=_cmd_gen)

    sim = sub.add_parser(
        "simulate", help="simulate a model on a nested grid, write i,t,value CSV + sidecar"
    )
    sim.add_argument("--model", choices=["fbm", "verhulst"], required=True)
    sim.add_argument("--lambda", dest="lam", type=float, default=1.0, help="verhulst growth rate")
    sim.add_argument("--sigma", type=float, default=0.5, help="verhulst noise scale")
    sim.add_argument("--xi", type=float, default=None, help="initial value")
    sim.add_argument("--hurst", type=float, required=True)
    sim.add_argument("--n", type=int, required=True, help="coarse grid steps")
    sim.add_argument("--kn", type=int, required=True, help="refinement factor k_n")
    sim.add_argument("--t", type=float, default=1.0)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True, help="output CSV file")
    sim.add_argument("--sidecar", default=None, help="sidecar path (default: out with .json)")
    sim.add_argument(
        "--force-kn",
        action="store_true",
        help="accept k_n below the ceil(n ln n) growth requirement",
    )
    sim.set_defaults(func=_cmd_simulate)

    est = sub.add_parser("estimate", help="estimate H from stored observations")
    est.add_argument("--estimator", choices=["h1", "h2"], required=True)
    est.add_argument("--input", required=True, help="path CSV (t,value) or nested CSV (i,t,value)")
    est.add_argument("--sidecar", default=None, help="JSON sidecar of a nested CSV")
    est.add_argument(
        "--g",
        default="one",
        help="known diffusion for h1: 'one', 'const:C', or 'scale:C' (g(x) = C*x)",
    )
    est.add_argument("--level", type=float, default=0.95)
    est.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    est.set_defaults(func=_cmd_estimate)

    mc = sub.add_parser("mc", help="run a Monte Carlo experiment from a JSON config")
    mc.add_argument("--config", required=True)
    mc.add_argument("--out-dir", default=None, help="override the config's out_dir")
    mc.set_defaults(func=_cmd_mc)
    return parser


def _cmd_gen(args) -> None:
    generator = generate_fbm_cholesky if args.method == "cholesky" else generate_fbm
    path = generator(args.hurst, args.n, args.t, args.seed)
    write_path_csv(path, args.out)
    print(f"wrote {args.out} ({path.n + 1} rows)")


def _build_model(args) -> ModelSpec:
    if args.model == "verhulst":
        xi = 1.0 if args.xi is None else args.xi
        return ModelSpec.verhulst(args.lam, args.sigma, xi)
    return ModelSpec.driver_only(0.0 if args.xi is None else args.xi)


def _cmd_simulate(args) -> None:
    model = _build_model(args)
    obs = sample_nested(
        model, args.hurst, args.n, args.kn, args.t, args.seed,
        enforce_growth=not args.force_kn,
    )
    write_nested(obs, args.out, args.sidecar, seed=args.seed, model=model.describe())
    print(f"wrote {args.out} ({obs.m_n + 1} rows) + sidecar")


def _parse_diffusion(spec: str):
    if spec in ("one", "1"):
        return None
    kind, _, value = spec.partition(":")
    if not value:
        raise ValueError(f"unknown diffusion spec {spec!r}; use one, const:C or scale:C")
    c = float(value)
    if kind == "const":
        return lambda x: np.full_like(np.asarray(x, dtype=float), c)
    if kind == "scale":
        return lambda x: c * np.asarray(x, dtype=float)
    raise ValueError(f"unknown diffusion spec {spec!r}; use one, const:C or scale:C")


def _cmd_estimate(args) -> None:
    with open(args.input) as fh:
        header = fh.readline().strip()
    nested = header == NESTED_HEADER or args.sidecar is not None
    if nested:
        obs, _meta = read_nested(args.input, args.sidecar)
        if args.estimator == "h2":
            result = estimate_h2(obs, args.level)
        else:
            coarse = SamplePath(obs.T, obs.coarse_values())
            result = estimate_h1(coarse, _parse_diffusion(args.g), args.level)
    else:
        if args.estimator == "h2":
            raise ValueError("the h2 estimator needs a nested CSV with its JSON sidecar")
        path = read_path_csv(args.input)
        result = estimate_h1(path, _parse_diffusion(args.g), args.level)
    if args.out:
        write_estimation_report(result, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(result.to_dict(), indent=2))


def _cmd_mc(args) -> None:
    config = ExperimentConfig.from_json_file(args.config)
    if args.out_dir is not None:
        config = replace(config, out_dir=args.out_dir)
    report = run_experiment(config)
    print(json.dumps(report.to_json_dict()["aggregates"], indent=2))


def cli_dispatch(argv=None) -> int:
    """Parse and run; returns the process exit code instead of raising."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help/--version paths
        return int(exc.code or 0)
    try:
        args.func(args)
        return EXIT_OK
    except (ValueError, KeyError, OSError, json.JSONDecodeError, HurstSDEError) as exc:
        print(f"hurst-sde: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
