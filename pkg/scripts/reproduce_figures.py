#!/usr/bin/env python3
"""
Reproduce the separation experiments at desk scale.

This script:
1. Runs the IPM separation, SD separation, Gaussian and kernel-check sweeps
2. Writes one CSV and one SVG chart per sweep into the output directory
3. Optionally stores every run in the results database

Usage:
    python scripts/reproduce_figures.py [--out-dir DIR] [--scale {smoke,desk}] [--workers N] [--db URL]
"""
import argparse
import logging
import os
import sys
import time
from pathlib import Path

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import ConfigurationError
from src.experiments import Experiment, build_config, persist_rows, run_experiment, write_csv
from src.plotting import plot_rows

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

# name -> (config values, chart title)
FIGURES = {
    "ipm_separation": (
        dict(experiment=Experiment.IPM_SEPARATION, k=4, dims=tuple(range(3, 11))),
        "F1 and F2 IPM, signed-Legendre pair, k=4",
    ),
    "sd_separation": (
        dict(experiment=Experiment.SD_SEPARATION, k=5, dims=tuple(range(3, 9)), gamma=1.0),
        "F1 and F2 Stein discrepancy, Gibbs measure, k=5",
    ),
    "gaussian_metrics": (
        dict(experiment=Experiment.GAUSSIAN_METRICS, k=1, dims=(2, 4, 8, 16, 32), n_samples=10**5, n_features=2000),
        "Standard vs one-axis-shrunk Gaussian",
    ),
    "kernel_check": (
        dict(experiment=Experiment.KERNEL_CHECK, k=1, dims=(2, 5, 10)),
        "Arc-cosine kernels vs feature Monte Carlo",
    ),
}

SMOKE_SIZES = dict(n_samples=2000, n_features=200, n_directions=200, grid_size=1000, repetitions=2)


def main():
    parser = argparse.ArgumentParser(description="Reproduce the separation experiments")
    parser.add_argument("--out-dir", type=Path, default=Path("results"), help="Directory for CSV and SVG files")
    parser.add_argument("--scale", choices=("smoke", "desk"), default="desk", help="Sample sizes to use")
    parser.add_argument("--only", choices=sorted(FIGURES), action="append", help="Run only these sweeps")
    parser.add_argument("--workers", type=int, help="Parallel workers for repetitions")
    parser.add_argument("--seed", type=int, default=0, help="Root random seed")
    parser.add_argument("--db", type=str, help="SQLAlchemy URL of the results store")
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    names = args.only or list(FIGURES)

    for name in names:
        values, title = FIGURES[name]
        values = {**values, "seed": args.seed, "workers": args.workers}
        if args.scale == "smoke":
            values.update(SMOKE_SIZES)

        try:
            config = build_config(**values)
        except ConfigurationError as e:
            logger.error(f"{name}: {e}")
            sys.exit(2)

        logger.info(f"Running {name} ({args.scale}) over d={config.dimensions}")
        start = time.time()
        rows = run_experiment(config)
        elapsed = time.time() - start

        csv_path = args.out_dir / f"{name}.csv"
        write_csv(rows, csv_path)
        failed = sum(1 for row in rows if row.failed)
        logger.info(f"{name}: {len(rows)} rows ({failed} failed) in {elapsed:.1f}s -> {csv_path}")

        if failed < len(rows):
            plot_rows(rows, args.out_dir / f"{name}.svg", title=title)

        if args.db:
            persist_rows(config, rows, args.db)

    print("\n" + "=" * 60)
    print("REPRODUCTION COMPLETE")
    print("=" * 60)
    print(f"Outputs in {args.out_dir.resolve()}")


if __name__ == "__main__":
    main()
