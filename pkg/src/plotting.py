"""
Static SVG line charts of experiment rows.

One line per metric with min/max error bars and, where present, the theory
column as a dashed line of the same color. Separation experiments use a log
y-axis.
"""
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Union

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .experiments import Experiment, ExperimentRow  # noqa: E402

logger = logging.getLogger(__name__)

LOG_SCALE_EXPERIMENTS = (Experiment.IPM_SEPARATION.value, Experiment.SD_SEPARATION.value)

STYLE = {
    "svg.fonttype": "none",
    "axes.labelsize": 10,
    "font.size": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [6.4, 4.0],
}


def _series(rows: Sequence[ExperimentRow]) -> Dict[str, List[ExperimentRow]]:
    grouped: Dict[str, List[ExperimentRow]] = defaultdict(list)
    for row in rows:
        if not row.failed:
            grouped[row.metric].append(row)
    return {metric: sorted(group, key=lambda r: r.dimension) for metric, group in grouped.items()}


def plot_rows(rows: Sequence[ExperimentRow], path: Union[str, Path], title: str = "") -> Path:
    """
    Write an SVG chart of rows (failed rows are skipped).

    Returns:
        The path written.
    """
    path = Path(path)
    if not rows:
        raise ValueError("No rows to plot")
    experiment = rows[0].experiment
    log_y = experiment in LOG_SCALE_EXPERIMENTS

    with mpl.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            for metric, group in _series(rows).items():
                dims = [r.dimension for r in group]
                means = [r.mean for r in group]
                lower = [r.mean - r.min for r in group]
                upper = [r.max - r.mean for r in group]
                bars = ax.errorbar(dims, means, yerr=[lower, upper], marker="o", markersize=3, capsize=2, label=metric)
                theory = [(r.dimension, r.theory) for r in group if r.theory is not None]
                if theory and any(t != m for (_, t), m in zip(theory, means)):
                    ax.plot(
                        [d for d, _ in theory],
                        [t for _, t in theory],
                        linestyle="--",
                        color=bars.lines[0].get_color(),
                        label=f"{metric} (theory)",
                    )
            if log_y:
                ax.set_yscale("log")
            ax.set_xlabel("dimension d")
            ax.set_ylabel("value")
            ax.set_title(title or experiment.replace("_", " "))
            ax.legend(loc="best")
            fig.tight_layout()
            fig.savefig(path, format="svg")
        finally:
            plt.close(fig)

    logger.info(f"Wrote plot {path}")
    return path
