#!/usr/bin/env python3
"""
Command-line front end for the GM/AM concentration toolkit.

    python -m evaluation.cli moment   --n 2 --weights equal --s 1
    python -m evaluation.cli bound    --weights two-level:4 --k 1 --eps 0.3
    python -m evaluation.cli simulate --n 10000 --weights equal --samples 100000 --seed 7
    python -m evaluation.cli table    --sweep M --n 10000 --m-values 1 2 4 8
    python -m evaluation.cli verify

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from core.bounds import BoundOptimizer, BoundQuery
from core.config import (COMMANDS, DEFAULT_SEED, FORMATS, SWEEPS, ExperimentConfig, load_config_file,
                         resolve_dimension, resolve_family, setup_logging)
from core.errors import GmAmError, OptimizationFailure, UsageError
from core.moments import euclidean_center, exact_moment_euclidean, exact_moment_weighted, sphere_area_weighted
from core.report import emit, render
from core.sampling import run_experiment
from core.weights import weight_stats
from evaluation.acceptance_verifier import AcceptanceVerifier
from evaluation.sweep_report_generator import SweepReportGenerator

logger = logging.getLogger("cli")

EPILOG = f"""
Weight specs:
  equal | two-level:M | diverging:sqrt | diverging:log | custom:@file.json | euclidean

Examples:
  python -m evaluation.cli moment --n 2 --weights equal --s 1
  python -m evaluation.cli moment --n 4 --weights euclidean --s 2
  python -m evaluation.cli bound --weights equal --k 1 --eps 0.3
  python -m evaluation.cli simulate --n 10000 --weights two-level:4 --samples 100000 --seed 7
  python -m evaluation.cli table --sweep n --weights diverging:sqrt --n-values 1000 10000 --format csv
  python -m evaluation.cli verify --samples 100

The default seed is {DEFAULT_SEED:#x}.
"""


class ConfigArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so every violation can be reported together."""

    def error(self, message: str):
        raise UsageError([message])


def _seed(value: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {value!r}") from None


def build_parser() -> ConfigArgumentParser:
    parser = ConfigArgumentParser(
        prog="python -m evaluation.cli",
        description="Exact moments, Chebyshev certificates and Monte Carlo experiments "
                    "for the GM/AM ratio on weighted l1 and Euclidean spheres",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument("command", choices=COMMANDS, help="what to compute")
    parser.add_argument("--n", type=int, help="dimension")
    parser.add_argument("--weights", help="weight spec (default: equal)")
    parser.add_argument("--s", type=float, help="moment exponent")
    parser.add_argument("--k", type=float, help="probability exponent: guarantee 1 - 1/n^k (default: 1)")
    parser.add_argument("--eps", dest="epsilon", type=float, help="relative accuracy in (0, 1) (default: 0.3)")
    parser.add_argument("--samples", type=int, help="Monte Carlo sample count (default: 100000)")
    parser.add_argument("--seed", type=_seed, help=f"64-bit seed (default: {DEFAULT_SEED:#x})")
    parser.add_argument("--format", choices=FORMATS, help="output format (default: json)")
    parser.add_argument("--out", help="output path (default: standard output)")
    parser.add_argument("--config", help="YAML file with defaults for any of these options")
    parser.add_argument("--sweep", choices=SWEEPS, help="table sweep: over n or over two-level M")
    parser.add_argument("--n-values", dest="n_values", type=int, nargs="+", help="dimensions for --sweep n")
    parser.add_argument("--m-values", dest="m_values", type=float, nargs="+", help="heights for --sweep M")
    parser.add_argument("--interval", dest="intervals", type=float, nargs=2, action="append",
                        metavar=("LO", "HI"), help="report P(LO <= ratio <= HI); repeatable")
    parser.add_argument("--batch-size", dest="batch_size", type=int, help="points per sampling batch")
    parser.add_argument("--workers", type=int, help="sampling threads (default: 1)")
    parser.add_argument("--progress", action="store_true", default=None, help="progress bar on stderr")
    parser.add_argument("-v", "--verbose", dest="verbosity", action="count", default=None,
                        help="-v for INFO logs, -vv for DEBUG")
    return parser


def parse_args(argv: Optional[List[str]] = None) -> ExperimentConfig:
    """argv → validated ExperimentConfig; raises UsageError listing every violation."""
    args = build_parser().parse_args(argv)
    values: Dict[str, Any] = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            values[key] = value
    for key in ("n_values", "m_values", "intervals"):
        if key in values:
            values[key] = [list(v) if isinstance(v, (list, tuple)) else v for v in values[key]]
    return ExperimentConfig.from_dict(values).validated()


def cmd_moment(config: ExperimentConfig) -> Dict[str, Any]:
    family = resolve_family(config)
    n = resolve_dimension(config, family)
    if family is None:
        report = exact_moment_euclidean(n, config.s).to_dict()
        report["weights"] = config.weights
        report["center"] = euclidean_center()
        return report
    levels = family.levels(n)
    report = exact_moment_weighted(levels, config.s).to_dict()
    report["weights"] = family.spec
    report["log_sphere_area"] = sphere_area_weighted(levels)
    report["weight_stats"] = weight_stats(levels).to_dict()
    return report


def cmd_bound(config: ExperimentConfig) -> Dict[str, Any]:
    family = resolve_family(config)
    optimizer = BoundOptimizer(BoundQuery(family, config.k, config.epsilon))
    certificate = optimizer.certified_interval(config.n)
    report = certificate.to_dict()
    report["tails"] = [tail.to_dict() for tail in certificate.tails]
    report["theorem_center"] = family.theorem_center()
    report["status"] = "certified"
    return report


def cmd_simulate(config: ExperimentConfig) -> Dict[str, Any]:
    family = resolve_family(config)
    n = resolve_dimension(config, family)
    state = run_experiment(config)
    if family is None:
        predicted = euclidean_center()
    else:
        predicted = weight_stats(family.levels(n)).predicted_center
    report: Dict[str, Any] = {
        "weights": config.weights,
        "n": n,
        "samples": config.samples,
        "seed": config.seed,
        "predicted_center": predicted,
    }
    report.update(state.to_dict(include_histogram=config.format == "json"))
    return report


def cmd_table(config: ExperimentConfig):
    return SweepReportGenerator(config).generate()


def cmd_verify(config: ExperimentConfig) -> AcceptanceVerifier:
    if config.weights.startswith("custom:"):
        # validation report before any computation
        resolve_family(config)
    verifier = AcceptanceVerifier(config)
    verifier.run()
    return verifier


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_args(argv)
    except UsageError as e:
        for violation in e.violations:
            sys.stderr.write(f"usage error: {violation}\n")
        sys.stderr.write("run with --help for usage\n")
        return 2

    setup_logging(config.verbosity)
    logger.info(f"Running {config.command} with weights={config.weights}")
    try:
        if config.command == "verify":
            verifier = cmd_verify(config)
            sys.stdout.write(verifier.render_lines())
            if config.out:
                emit(render(verifier.to_dict(), "json"), config.out)
            return 0 if verifier.passed else 1
        if config.command == "moment":
            payload = cmd_moment(config)
        elif config.command == "bound":
            payload = cmd_bound(config)
        elif config.command == "simulate":
            payload = cmd_simulate(config)
        else:
            payload = cmd_table(config)
        emit(render(payload, config.format), config.out)
        return 0
    except OptimizationFailure as e:
        sys.stderr.write(f"error: {e}\n")
        sys.stderr.write(render(e.to_dict(), "json"))
        return 1
    except (GmAmError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
