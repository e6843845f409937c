"""
Tests for SVG charts of experiment rows.
"""
import pytest

from src.experiments import ExperimentRow
from src.plotting import plot_rows


def _rows(experiment: str):
    return [
        ExperimentRow(experiment, 3, 2, "f1_ipm", 0.3, 0.25, 0.35, 0.32, 10, 0, 2, 0),
        ExperimentRow(experiment, 4, 2, "f1_ipm", 0.2, 0.15, 0.25, 0.22, 10, 0, 2, 0),
        ExperimentRow(experiment, 5, 2, "f1_ipm", None, None, None, None, 10, 0, 2, 0, status="failed"),
        ExperimentRow(experiment, 3, 2, "f2_ipm", 0.1, 0.1, 0.1, None, 10, 5, 2, 0),
    ]


class TestPlotRows:
    """Tests for plot_rows."""

    def test_writes_svg(self, tmp_path):
        path = plot_rows(_rows("ipm_separation"), tmp_path / "chart.svg")
        text = path.read_text(encoding="utf-8")
        assert "<svg" in text
        assert "f1_ipm (theory)" in text

    def test_linear_axis_experiment(self, tmp_path):
        path = plot_rows(_rows("gaussian_metrics"), tmp_path / "chart.svg", title="Gaussians")
        assert "Gaussians" in path.read_text(encoding="utf-8")

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            plot_rows([], tmp_path / "chart.svg")
