"""
Command-line entry point: sphere-metrics.

Usage:
    sphere-metrics ipm-sep --k 2 --dims 3:9 --samples 1000000 --features 10000 --reps 10 --seed 42 --out out.csv
    sphere-metrics sd-sep --k 5 --dims 3:8 --gamma 1.0
    sphere-metrics gauss --dims 2,4,8,16,32 --samples 100000 --plot gauss.svg
    sphere-metrics kernel-check --dims 2,5,10 --features 1000000

Exit codes: 0 success, 2 invalid configuration, 3 every row failed.
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .config import ConfigurationError, get_settings, validate_settings
from .experiments import (
    Experiment,
    ExperimentConfig,
    build_config,
    parse_dims,
    persist_rows,
    run_experiment,
    write_csv,
)
from .plotting import plot_rows

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_ALL_FAILED = 3

SUBCOMMANDS = {
    "ipm-sep": (Experiment.IPM_SEPARATION, "F1 vs F2 IPM on the signed-Legendre pair", 6, "3:9"),
    "sd-sep": (Experiment.SD_SEPARATION, "F1 vs F2 Stein discrepancy against the Gibbs measure", 5, "3:8"),
    "gauss": (Experiment.GAUSSIAN_METRICS, "All metrics between standard and one-axis-shrunk Gaussians", 1, "2,4,8,16,32"),
    "kernel-check": (Experiment.KERNEL_CHECK, "Closed-form arc-cosine kernels vs feature Monte Carlo", 1, "2,5,10"),
}


def _add_common_arguments(parser: argparse.ArgumentParser, default_k: int, default_dims: str) -> None:
    parser.add_argument("--k", type=int, default=default_k, help="Legendre degree k")
    parser.add_argument("--dims", type=str, default=default_dims, help="Dimensions: lo:hi[:stride] or d1,d2,...")
    parser.add_argument("--samples", type=int, help="Samples per measure")
    parser.add_argument("--features", type=int, help="Random features for F2 estimates")
    parser.add_argument("--directions", type=int, help="Projection directions for sliced W1")
    parser.add_argument("--grid", type=int, help="Grid size for the SD suprema (>= 100)")
    parser.add_argument("--reps", type=int, help="Repetitions per dimension")
    parser.add_argument("--alpha", type=int, default=1, help="Activation homogeneity degree")
    parser.add_argument("--a", type=float, default=1.0, help="Activation weight on (x)_+^alpha")
    parser.add_argument("--b", type=float, default=0.0, help="Activation weight on (-x)_+^alpha")
    parser.add_argument("--gamma", type=float, default=1.0, help="Gibbs exponent (sd-sep)")
    parser.add_argument("--seed", type=int, default=0, help="Root random seed (64-bit unsigned)")
    parser.add_argument("--workers", type=int, help="Parallel workers for repetitions")
    parser.add_argument("--out", type=Path, help="CSV output path (stdout if omitted)")
    parser.add_argument("--plot", type=Path, help="SVG plot output path")
    parser.add_argument(
        "--tilde-t-mode",
        choices=("arcsine", "uniform"),
        default="arcsine",
        help="Feature t-marginal for F2-tilde",
    )
    parser.add_argument("--clip-to-ball", type=float, metavar="R", help="Map Gaussian points into the unit ball at radius R")
    parser.add_argument("--db", type=str, help="SQLAlchemy URL of the results store")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphere-metrics",
        description="Separation experiments for neural-network IPMs, Stein discrepancies and sliced Wasserstein distances",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, default_k, default_dims) in SUBCOMMANDS.items():
        _add_common_arguments(subparsers.add_parser(name, help=help_text), default_k, default_dims)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = getattr(logging, get_settings().log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def _check_writable(path: Optional[Path]) -> None:
    if path is None:
        return
    parent = path.resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise ConfigurationError(f"Cannot write to {path}: directory {parent} is missing or read-only")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Turn parsed arguments into a validated ExperimentConfig."""
    experiment = SUBCOMMANDS[args.command][0]
    _check_writable(args.out)
    _check_writable(args.plot)
    return build_config(
        experiment=experiment,
        k=args.k,
        dims=parse_dims(args.dims),
        n_samples=args.samples,
        n_features=args.features,
        n_directions=args.directions,
        grid_size=args.grid,
        repetitions=args.reps,
        alpha=args.alpha,
        a=args.a,
        b=args.b,
        gamma=args.gamma,
        seed=args.seed,
        workers=args.workers,
        tilde_t_mode=args.tilde_t_mode,
        clip_to_ball=args.clip_to_ball,
        out_csv=args.out,
        out_plot=args.plot,
        db_url=args.db or get_settings().results_db_url or None,
    )


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the experiment and write its outputs.

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG_ERROR if e.code else EXIT_OK

    _configure_logging(args)
    try:
        validate_settings()
        config = config_from_args(args)
    except ConfigurationError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    logger.info(
        f"Running {config.experiment.value}: k={config.k}, dims={config.dimensions}, "
        f"samples={config.n_samples}, features={config.n_features}, reps={config.repetitions}, seed={config.seed}"
    )
    rows = run_experiment(config)

    if config.out_csv is not None:
        write_csv(rows, config.out_csv)
        logger.info(f"Wrote {len(rows)} rows to {config.out_csv}")
    else:
        write_csv(rows, sys.stdout)

    if config.out_plot is not None and any(not row.failed for row in rows):
        plot_rows(rows, config.out_plot)

    if config.db_url:
        persist_rows(config, rows)

    if rows and all(row.failed for row in rows):
        logger.error("Every row failed")
        return EXIT_ALL_FAILED
    return EXIT_OK


def main() -> None:
    """Console-script entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
