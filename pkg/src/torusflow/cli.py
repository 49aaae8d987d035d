"""Command-line entry point.

Subcommands: run, verify, unify, convergence, blocks.  A config file may
set every knob; command-line flags override it.  Exit codes: 0 pass,
1 check failure, 2 usage or config error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, parse_config
from .errors import ParseError, RangeError, TorusflowError
from .experiments import EXIT_CONFIG_ERROR, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusflow",
        description="Pseudospectral torus toolkit: solvers, band operators, verification",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, help_text in (
        ("run", "evolve one trajectory and write snapshots + diagnostics CSV"),
        ("verify", "run the numerical check battery and write a JSON summary"),
        ("unify", "blend the three schemes and tabulate reconstruction error vs eps"),
        ("convergence", "mollifier approximation-rate study"),
        ("blocks", "dump per-block energies and mollifier symbols as CSV"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--n", type=int, help="modes per axis (even, >= 4)")
        p.add_argument("--nu", type=float, help="viscosity")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--t-end", type=float, dest="t_end", help="time horizon")
        p.add_argument("--eps", type=float, help="single blending scale (replaces eps_list)")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", type=str, help="output directory")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
        cfg.experiment = args.experiment
    else:
        cfg = ExperimentConfig(experiment=args.experiment)
    if args.n is not None:
        if args.n < 4 or args.n % 2 != 0:
            raise RangeError("n must be even >= 4")
        cfg.n = args.n
    if args.nu is not None:
        if args.nu < 0:
            raise RangeError("nu must be nonnegative")
        cfg.nu = args.nu
    if args.dt is not None:
        if args.dt <= 0:
            raise RangeError("dt must be positive")
        cfg.dt = args.dt
    if args.t_end is not None:
        if args.t_end < 0:
            raise RangeError("t_end must be nonnegative")
        cfg.t_end = args.t_end
    if args.eps is not None:
        if args.eps <= 0:
            raise RangeError("eps must be positive")
        cfg.eps_list = (args.eps,)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ParseError, RangeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        return run_experiment(cfg)
    except TorusflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
