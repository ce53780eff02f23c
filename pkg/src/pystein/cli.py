"""
Command-line interface for pystein.
"""

import argparse
import logging
import sys
from typing import List, Optional

from .config import EXPERIMENTS, ExperimentConfig
from .errors import ConfigError, InequalityViolation
from .experiments import run_experiment
from .plotdata import collect_results, emit_plotdata

HELP = {
    "examples": "closed-form orbit examples and averaged-state rates",
    "stein-iid": "Stein exponents for a pair of states",
    "stein-composite": "composite Stein exponents against a free family",
    "stein-audit": "entropy-budget audit of the pinched sigma' construction",
    "second-law": "measure-and-prepare channel conversions",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pystein",
        description="Finite-n experiments on composite hypothesis testing and resource theories",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name, help=HELP[name])
        sub.add_argument(
            "-c", "--config",
            type=str,
            help="JSON or YAML experiment config (default: built-in defaults)"
        )
        sub.add_argument(
            "-o", "--out",
            type=str,
            help="Output directory (default: out_dir from the config, else results)"
        )
        sub.add_argument(
            "--bits",
            action="store_true",
            help="Report entropies and rates in bits instead of nats"
        )
        sub.add_argument("--seed", type=int, help="Random seed (overrides the config)")
        sub.add_argument(
            "--n-max",
            type=int,
            help="Run n = 1..N_MAX (overrides the config's n range)"
        )
        sub.add_argument(
            "-v", "--verbose",
            action="count",
            default=0,
            help="Log progress; repeat for debug output"
        )
    sub = subparsers.add_parser("plotdata", help="gnuplot data files from experiment results")
    sub.add_argument("results", type=str, help="Directory holding experiment CSV/JSON files")
    sub.add_argument(
        "-o", "--out",
        type=str,
        default="plotdata",
        help="Output directory (default: plotdata)"
    )
    sub.add_argument("-v", "--verbose", action="count", default=0, help="Log progress")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """The experiment config with command-line overrides applied."""
    if args.config:
        config = ExperimentConfig.from_yaml(args.config)
        if config.experiment != args.command:
            raise ConfigError(
                f"Config '{args.config}' is for '{config.experiment}', not '{args.command}'"
            )
    else:
        config = ExperimentConfig(experiment=args.command)
    if args.seed is not None:
        config.seed = args.seed
    if args.n_max is not None:
        config.n_range = list(range(1, args.n_max + 1))
    if args.out:
        config.out_dir = args.out
    return config


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for the CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.verbose >= 2:
        level = logging.DEBUG
    elif args.verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "plotdata":
            files = emit_plotdata(collect_results(args.results), args.out)
        else:
            config = load_config(args)
            result = run_experiment(config)
            files = result.write(config.out_dir, bits=args.bits)
            for note in result.notes:
                print(f"Note: {note}")

        print(f"Wrote {len(files)} file(s):")
        for path in files:
            print(f"  {path}")

    except InequalityViolation as e:
        print(f"Inequality violated: {e.inequality}", file=sys.stderr)
        print(f"  lhs={e.lhs!r} rhs={e.rhs!r} slack={e.slack!r}", file=sys.stderr)
        print(f"  fixture: {e.fixture or '(built-in defaults)'}", file=sys.stderr)
        if args.verbose:
            raise
        sys.exit(2)
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        if args.verbose:
            raise
        sys.exit(1)


if __name__ == "__main__":
    main()
