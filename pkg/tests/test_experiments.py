"""
Tests for experiment configuration, sweeps, CSV output and persistence.

Sizes here are tiny; full-scale runs live behind the slow marker.
"""
import io
import math
from pathlib import Path

import pytest

from src.config import ConfigurationError, get_settings
from src.db.connection import get_engine, get_session
from src.db.queries import fetch_rows, latest_run
from src.measures import GaussianSpec, derive_seed, lift_to_ball, sample_gaussian_pair
from src.metrics import sliced_w1
from src.experiments import (
    CSV_COLUMNS,
    GAUSSIAN_METRICS,
    Experiment,
    ExperimentRow,
    build_config,
    gaussian_w1_axis,
    parse_dims,
    persist_rows,
    read_csv,
    run_experiment,
    run_ipm_separation,
    summarize,
    write_csv,
)

GOLDEN_CSV = Path(__file__).parent / "data" / "golden_ipm_separation.csv"

# Keep in sync with scripts/regenerate_golden.py
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


def _ipm_config(**overrides):
    values = dict(
        experiment=Experiment.IPM_SEPARATION,
        k=2,
        dims=(3, 4),
        n_samples=2000,
        n_features=200,
        repetitions=2,
        seed=7,
        workers=1,
    )
    values.update(overrides)
    return build_config(**values)


def _csv_text(rows) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


# =============================================================================
# CONFIGURATION
# =============================================================================

class TestParseDims:
    """Tests for the --dims syntax."""

    def test_range(self):
        assert parse_dims("3:9") == (3, 4, 5, 6, 7, 8, 9)

    def test_range_with_stride(self):
        assert parse_dims("3:9:2") == (3, 5, 7, 9)

    def test_list(self):
        assert parse_dims("16,2,4,8,4") == (2, 4, 8, 16)

    def test_single(self):
        assert parse_dims("5") == (5,)

    @pytest.mark.parametrize("text", ["9:3", "a:b", "3:9:0", "1:2:3:4", ""])
    def test_invalid(self, text):
        with pytest.raises(ConfigurationError):
            parse_dims(text)


class TestBuildConfig:
    """Tests for validation and settings defaults."""

    def test_defaults_from_settings(self, monkeypatch):
        monkeypatch.setenv("SPHERE_METRICS_DEFAULT_SAMPLES", "1234")
        get_settings.cache_clear()
        config = build_config(experiment=Experiment.IPM_SEPARATION, dims=(3,))
        assert config.n_samples == 1234
        assert config.grid_size == get_settings().sd_grid_size

    def test_explicit_values_win(self):
        assert _ipm_config(n_samples=10).n_samples == 10

    def test_dimension_floor_for_separation(self):
        with pytest.raises(ConfigurationError):
            _ipm_config(dims=(2, 3))

    def test_dimension_floor_for_first_degree(self):
        assert _ipm_config(k=1, dims=(2,)).dimensions == [2]

    def test_gamma_range(self):
        with pytest.raises(ConfigurationError):
            build_config(experiment=Experiment.SD_SEPARATION, k=3, dims=(3,), gamma=1.5)

    @pytest.mark.parametrize(
        "field,value",
        [("grid_size", 50), ("seed", -1), ("seed", 2**64), ("repetitions", 0), ("tilde_t_mode", "cosine"), ("alpha", -1)],
    )
    def test_invalid_fields(self, field, value):
        with pytest.raises(ConfigurationError) as excinfo:
            _ipm_config(**{field: value})
        assert field in str(excinfo.value)

    def test_max_seed_accepted(self):
        assert _ipm_config(seed=2**64 - 1).seed == 2**64 - 1

    def test_bad_clip_radius(self):
        with pytest.raises(ConfigurationError):
            build_config(experiment=Experiment.GAUSSIAN_METRICS, dims=(2,), clip_to_ball=-1.0)


# =============================================================================
# ROWS
# =============================================================================

class TestRows:
    """Tests for row invariants and summaries."""

    def test_summarize(self):
        assert summarize([1.0, 2.0, 3.0]) == (2.0, 1.0, 3.0)

    def test_summarize_clamps_round_off(self):
        mean, lo, hi = summarize([0.1, 0.1, 0.1])
        assert lo <= mean <= hi

    def test_row_ordering_invariant(self):
        with pytest.raises(ValueError):
            ExperimentRow("x", 3, 2, "m", 5.0, 1.0, 2.0, None, 1, 1, 1, 0)

    def test_failed_row_has_no_values(self):
        row = ExperimentRow("x", 3, 2, "m", None, None, None, None, 1, 1, 1, 0, status="failed")
        assert row.failed


# =============================================================================
# SWEEPS
# =============================================================================

class TestIpmSeparation:
    """Tests for the signed-Legendre sweep."""

    def test_rows(self):
        rows = run_ipm_separation(_ipm_config())
        assert [(r.dimension, r.metric) for r in rows] == [
            (3, "f1_ipm"), (3, "f2_ipm"), (3, "ipm_ratio"),
            (4, "f1_ipm"), (4, "f2_ipm"), (4, "ipm_ratio"),
        ]
        assert all(r.min <= r.mean <= r.max for r in rows)
        ratio = rows[2]
        assert ratio.theory == pytest.approx(math.sqrt(5))
        assert ratio.mean == pytest.approx(rows[0].mean / rows[1].mean)

    def test_f1_close_to_theory(self):
        rows = run_ipm_separation(_ipm_config(n_samples=20_000, dims=(3,)))
        f1 = rows[0]
        assert f1.mean == pytest.approx(f1.theory, rel=0.1)

    def test_deterministic(self):
        assert _csv_text(run_ipm_separation(_ipm_config())) == _csv_text(run_ipm_separation(_ipm_config()))

    def test_parallel_matches_serial(self):
        """Repetition seeds do not depend on which worker runs them."""
        serial = _csv_text(run_ipm_separation(_ipm_config()))
        assert _csv_text(run_ipm_separation(_ipm_config(workers=2))) == serial

    def test_seed_changes_output(self):
        assert _csv_text(run_ipm_separation(_ipm_config(seed=1))) != _csv_text(run_ipm_separation(_ipm_config(seed=2)))

    def test_rejection_cap_marks_rows_failed(self, monkeypatch):
        monkeypatch.setenv("SPHERE_METRICS_REJECTION_CAP", "10")
        get_settings.cache_clear()
        rows = run_ipm_separation(_ipm_config(dims=(3,)))
        assert len(rows) == 3
        assert all(r.failed and r.mean is None for r in rows)

    def test_wrong_experiment(self):
        with pytest.raises(ConfigurationError):
            run_ipm_separation(build_config(experiment=Experiment.KERNEL_CHECK, dims=(2,)))


class TestSdSeparation:
    """Tests for the Stein discrepancy sweep."""

    def _config(self, **overrides):
        values = dict(
            experiment=Experiment.SD_SEPARATION,
            k=3,
            dims=(3, 4),
            n_samples=500,
            n_features=50,
            grid_size=200,
            repetitions=2,
            seed=3,
        )
        values.update(overrides)
        return build_config(**values)

    def test_rows(self):
        rows = run_experiment(self._config())
        by_metric = {(r.dimension, r.metric): r for r in rows}
        assert len(rows) == 10
        for d in (3, 4):
            assert by_metric[(d, "sd_f1")].mean >= by_metric[(d, "sd_f1_lower_bound")].mean
            assert by_metric[(d, "sd_f1")].repetitions == 1
            assert by_metric[(d, "sd_f2")].repetitions == 2
            assert by_metric[(d, "sd_ratio")].theory > 1.0

    def test_zero_gamma(self):
        rows = run_experiment(self._config(gamma=0.0))
        assert all(not r.failed for r in rows)
        assert all(r.mean == 0.0 for r in rows)

    def test_vanishing_parity_marks_rows_failed(self):
        rows = run_experiment(self._config(k=2, a=1.0, b=1.0))
        assert rows and all(r.failed for r in rows)

    def test_gamma_recorded_on_every_row(self):
        rows = run_experiment(self._config(gamma=-0.5, dims=(3,)))
        assert [r.gamma for r in rows] == [-0.5] * len(rows)
        assert _csv_text(rows).splitlines()[1].endswith(",-0.5")

    def test_gamma_survives_csv(self, tmp_path):
        rows = run_experiment(self._config(dims=(3,)))
        path = tmp_path / "sd.csv"
        write_csv(rows, path)
        assert [r.gamma for r in read_csv(path)] == [1.0] * len(rows)


class TestGaussianMetrics:
    """Tests for the Gaussian sweep."""

    def _config(self, **overrides):
        values = dict(
            experiment=Experiment.GAUSSIAN_METRICS,
            k=1,
            dims=(2, 3),
            n_samples=500,
            n_features=100,
            n_directions=50,
            repetitions=2,
            f1_restarts=1,
            f1_steps=5,
            seed=11,
        )
        values.update(overrides)
        return build_config(**values)

    def test_rows(self):
        rows = run_experiment(self._config())
        metrics = {r.metric for r in rows}
        assert metrics == set(GAUSSIAN_METRICS) | {f"{m}_noise" for m in GAUSSIAN_METRICS}
        assert len(rows) == 2 * 2 * len(GAUSSIAN_METRICS)
        max_sliced = next(r for r in rows if r.metric == "max_sliced_w1")
        assert max_sliced.theory == pytest.approx(gaussian_w1_axis(0.1))

    def test_pair_exceeds_noise(self):
        rows = run_experiment(self._config(n_samples=5000, dims=(3,)))
        values = {r.metric: r.mean for r in rows}
        assert values["max_sliced_w1"] > 5 * values["max_sliced_w1_noise"]
        assert values["f1_ipm_axis"] > values["f1_ipm_axis_noise"]

    def test_f1_dominates_axis(self):
        """The optimized F1 search includes the axis direction."""
        rows = run_experiment(self._config())
        values = {(r.dimension, r.metric): r for r in rows}
        for d in (2, 3):
            assert values[(d, "f1_ipm_optimized")].min >= values[(d, "f1_ipm_axis")].min - 1e-12

    def test_clipped(self):
        rows = run_experiment(self._config(clip_to_ball=4.0, dims=(2,)))
        assert all(not r.failed for r in rows)
        axis = next(r for r in rows if r.metric == "f1_ipm_axis")
        assert axis.theory is None

    def test_clipped_rows_share_measures(self):
        """With clipping, the sliced rows are computed on the same clipped sets as the IPM rows."""
        config = self._config(clip_to_ball=1.0, dims=(3,), repetitions=1, n_samples=2000, n_features=500, n_directions=400)
        rows = {r.metric: r for r in run_experiment(config)}
        seed = derive_seed(config.seed, 3, 0)
        standard, shrunk = sample_gaussian_pair(GaussianSpec(3, config.shrunk_variance), config.n_samples, seed)
        expected = sliced_w1(lift_to_ball(standard, 1.0), lift_to_ball(shrunk, 1.0), config.n_directions, seed)
        assert rows["sliced_w1"].mean == pytest.approx(expected, rel=1e-12)
        assert rows["max_sliced_w1"].theory is None
        assert math.pi * rows["f2_tilde_ipm"].mean ** 2 <= rows["sliced_w1"].mean


class TestKernelCheck:
    def test_rows(self):
        config = build_config(experiment=Experiment.KERNEL_CHECK, dims=(2, 5), n_features=20_000, kernel_pairs=3, seed=1)
        rows = run_experiment(config)
        assert [r.metric for r in rows] == ["kernel_alpha0_abs_z", "kernel_alpha1_abs_z"] * 2
        assert all(r.max < 5.0 for r in rows)


# =============================================================================
# CSV
# =============================================================================

class TestCsv:
    """Tests for the results file format."""

    def test_header(self):
        assert _csv_text([]).splitlines() == [",".join(CSV_COLUMNS)]

    def test_failed_row_fields_are_empty(self):
        row = ExperimentRow("ipm_separation", 3, 2, "f1_ipm", None, None, None, None, 10, 0, 1, 5, status="failed")
        line = _csv_text([row]).splitlines()[1]
        assert line == "ipm_separation,3,2,f1_ipm,,,,,10,0,1,5,failed,"

    def test_round_trip(self, tmp_path):
        rows = run_ipm_separation(_ipm_config(dims=(3,)))
        path = tmp_path / "out.csv"
        write_csv(rows, path)
        assert read_csv(path) == rows

    def test_full_precision(self):
        row = ExperimentRow("x", 3, 2, "m", 0.1, 0.1, 0.1, 1 / 3, 1, 1, 1, 2**64 - 1)
        line = _csv_text([row]).splitlines()[1]
        assert "0.33333333333333331" in line
        assert str(2**64 - 1) in line

    def test_golden_file(self):
        """k=2, d=3..5, n=10^5, seed=7 reproduces the checked-in CSV byte for byte."""
        assert GOLDEN_CSV.exists(), f"{GOLDEN_CSV} is missing; create it with scripts/regenerate_golden.py"
        rows = run_experiment(build_config(**GOLDEN_CONFIG))
        assert _csv_text(rows) == GOLDEN_CSV.read_text(encoding="utf-8")


# =============================================================================
# PERSISTENCE
# =============================================================================

class TestPersistence:
    """Tests for storing runs in the results database."""

    def test_persist_and_fetch(self, tmp_path):
        url = f"sqlite:///{tmp_path / 'results.db'}"
        config = _ipm_config(dims=(3,), seed=2**64 - 1)
        rows = run_ipm_separation(config)
        run_id = persist_rows(config, rows, url)

        with get_session(get_engine(url)) as session:
            stored = fetch_rows(session, run_id)
            run = latest_run(session, "ipm_separation")
            assert run.id == run_id
            assert run.status == "completed"
            assert int(run.seed) == 2**64 - 1
        assert [r["metric"] for r in stored] == [r.metric for r in rows]
        assert stored[0]["mean"] == rows[0].mean

    def test_missing_url(self):
        config = _ipm_config(dims=(3,))
        with pytest.raises(ConfigurationError):
            persist_rows(config, [])


# =============================================================================
# ACCEPTANCE
# =============================================================================

@pytest.mark.slow
class TestAcceptance:
    """Desk-scale checks of the separation claims."""

    @pytest.mark.parametrize("k,d,n_harmonics", [(2, 3, 5), (2, 4, 9), (3, 3, 7), (2, 5, 14), (4, 3, 9)])
    def test_ipm_ratio_tracks_sqrt_n(self, k, d, n_harmonics):
        """F1/F2 on the signed-Legendre pair is sqrt(N_{k,d}) within 15%."""
        rows = run_ipm_separation(
            build_config(
                experiment=Experiment.IPM_SEPARATION, k=k, dims=(d,), n_samples=10**6, n_features=10**4, repetitions=3
            )
        )
        ratio = next(r for r in rows if r.metric == "ipm_ratio")
        assert ratio.theory == pytest.approx(math.sqrt(n_harmonics), rel=1e-12)
        assert ratio.mean == pytest.approx(math.sqrt(n_harmonics), rel=0.15)

    def test_ipm_trend_in_dimension(self):
        """k=4, d=3..10: F1 stays flat while F2 collapses."""
        rows = run_ipm_separation(
            build_config(
                experiment=Experiment.IPM_SEPARATION,
                k=4,
                dims=tuple(range(3, 11)),
                n_samples=10**6,
                n_features=2000,
                repetitions=1,
            )
        )
        f1 = {r.dimension: r.mean for r in rows if r.metric == "f1_ipm"}
        f2 = {r.dimension: r.mean for r in rows if r.metric == "f2_ipm"}
        assert max(f1.values()) < 1.5 * min(f1.values())
        assert f2[10] < f2[3] / 3

    def test_gaussian_axis_and_blind_metrics(self):
        """
        Max-sliced along the shrunk axis matches |1 - sqrt(0.1)| sqrt(2/pi) at
        every d; at d=32 sliced W1 and F2 see only a small fraction of it and
        stay within a few noise baselines.
        """
        config = build_config(
            experiment=Experiment.GAUSSIAN_METRICS,
            dims=(2, 4, 8, 16, 32),
            n_samples=10**5,
            n_features=1000,
            n_directions=1000,
            repetitions=1,
            f1_restarts=1,
            f1_steps=5,
        )
        rows = {(r.dimension, r.metric): r.mean for r in run_experiment(config)}
        for d in (2, 4, 8, 16, 32):
            assert rows[(d, "max_sliced_w1")] == pytest.approx(gaussian_w1_axis(0.1), rel=0.05)
        axis = rows[(32, "max_sliced_w1")]
        for metric in ("sliced_w1", "f2_ipm"):
            assert rows[(32, metric)] < 0.1 * axis
            assert rows[(32, metric)] < 5 * rows[(32, f"{metric}_noise")]
