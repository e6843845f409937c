#!/usr/bin/env python3
"""
Regenerate the golden CSV used by the regression test in tests/test_experiments.py.

Run this only when a change to the estimators is intended to move the numbers,
then review the diff of tests/data/golden_ipm_separation.csv before committing.

Usage:
    python scripts/regenerate_golden.py [--check]
"""
import argparse
import io
import logging
import os
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.experiments import Experiment, build_config, run_experiment, write_csv

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

GOLDEN_CSV = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_ipm_separation.csv"

# Keep in sync with tests/test_experiments.py
GOLDEN_CONFIG = dict(
    experiment=Experiment.IPM_SEPARATION,
    k=2,
    dims=(3, 4, 5),
    n_samples=100_000,
    n_features=500,
    repetitions=3,
    seed=7,
    workers=1,
)


def render() -> str:
    """Run the golden configuration and return its CSV text."""
    rows = run_experiment(build_config(**GOLDEN_CONFIG))
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def main():
    parser = argparse.ArgumentParser(description="Regenerate the golden IPM separation CSV")
    parser.add_argument("--check", action="store_true", help="Compare against the stored file instead of writing")
    args = parser.parse_args()

    text = render()

    if args.check:
        if not GOLDEN_CSV.exists():
            logger.error(f"{GOLDEN_CSV} does not exist")
            sys.exit(1)
        if GOLDEN_CSV.read_text(encoding="utf-8") != text:
            logger.error("Golden CSV is out of date")
            sys.exit(1)
        logger.info("Golden CSV is up to date")
        return

    GOLDEN_CSV.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_CSV.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {len(text.splitlines()) - 1} rows to {GOLDEN_CSV}")


if __name__ == "__main__":
    main()
