"""
Experiment sweeps over the dimension d.

Four experiments share one row format:

- ipm_separation: F1 vs F2 IPM between the signed-Legendre pair mu_d / nu_d
- sd_separation: F1 vs F2 Stein discrepancy between uniform and Gibbs measures
- gaussian_metrics: F1, F2, F2-tilde, sliced and max-sliced W1 between a
  standard Gaussian and a Gaussian with one shrunk axis, plus the same metrics
  between two standard Gaussian sample sets (noise baseline)
- kernel_check: closed-form arc-cosine kernels vs feature Monte Carlo

Every repetition r at dimension d runs with seed derive_seed(seed, d, r), so
results do not depend on the order in which repetitions finish.
"""
import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from .config import ConfigurationError, get_settings
from .db.connection import get_engine, get_session, init_database
from .db.queries import finish_run, insert_rows, insert_run
from .harmonics import (
    ActivationSpec,
    DegenerateIntegralError,
    LegendreIndex,
    UnsupportedParameterError,
)
from .measures import (
    MAX_SEED,
    GaussianSpec,
    GibbsSpec,
    LegendrePairSpec,
    RejectionCapExceeded,
    derive_seed,
    lift_to_ball,
    sample_gaussian_pair,
    sample_legendre_pair,
)
from .metrics import (
    KnownAxis,
    ipm_f1_known_direction,
    ipm_f1_optimize,
    ipm_f2_features,
    ipm_f2_tilde,
    kernel_check,
    max_sliced_w1,
    sd_f1_brute_force,
    sd_f1_lower_bound,
    sd_f2_features,
    sd_f2_upper_bound,
    sd_ratio_lower_bound,
    sliced_w1,
    theoretical_f1_ipm,
    theoretical_f2_ipm,
    theoretical_ratio,
)
from .metrics.ipm import TILDE_T_MODES

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "experiment",
    "dimension",
    "k",
    "metric",
    "mean",
    "min",
    "max",
    "theory",
    "n_samples",
    "n_features",
    "repetitions",
    "seed",
    "status",
    "gamma",
)

# Per-dimension failures that mark rows failed instead of aborting the sweep
RECOVERABLE_ERRORS = (RejectionCapExceeded, DegenerateIntegralError, UnsupportedParameterError)

GAUSSIAN_METRICS = ("f1_ipm_optimized", "f1_ipm_axis", "f2_ipm", "f2_tilde_ipm", "sliced_w1", "max_sliced_w1")


# =============================================================================
# CONFIGURATION
# =============================================================================


class Experiment(str, Enum):
    IPM_SEPARATION = "ipm_separation"
    SD_SEPARATION = "sd_separation"
    GAUSSIAN_METRICS = "gaussian_metrics"
    KERNEL_CHECK = "kernel_check"


def parse_dims(text: str) -> Tuple[int, ...]:
    """
    Parse 'lo:hi[:stride]' (inclusive) or a comma list 'd1,d2,...' into dimensions.

    Raises:
        ConfigurationError: If the text is malformed or the range is empty.
    """
    try:
        if "," in text or ":" not in text:
            values = sorted({int(p) for p in text.split(",") if p.strip()})
        else:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ConfigurationError(f"Dimension range must look like lo:hi[:stride], got {text!r}")
            lo, hi, stride = parts if len(parts) == 3 else (*parts, 1)
            if stride < 1:
                raise ConfigurationError(f"Dimension stride must be >= 1, got {stride}")
            values = list(range(lo, hi + 1, stride))
    except ValueError:
        raise ConfigurationError(f"Dimensions must be integers, got {text!r}")
    if not values:
        raise ConfigurationError(f"Dimension range {text!r} is empty")
    return tuple(values)


class ExperimentConfig(BaseModel):
    """Validated parameters of one sweep."""

    experiment: Experiment
    k: int = 2
    dims: Tuple[int, ...] = (3, 4, 5, 6, 7, 8, 9)
    n_samples: int = 10**6
    n_features: int = 10**4
    n_directions: int = 10**4
    grid_size: int = 100_000
    repetitions: int = 10
    alpha: int = 1
    a: float = 1.0
    b: float = 0.0
    gamma: float = 1.0
    seed: int = 0
    workers: int = 1
    tilde_t_mode: str = "arcsine"
    clip_to_ball: Optional[float] = None
    shrunk_variance: float = 0.1
    f1_restarts: int = 4
    f1_steps: int = 50
    kernel_pairs: int = 50
    out_csv: Optional[Path] = None
    out_plot: Optional[Path] = None
    db_url: Optional[str] = None

    @field_validator("n_samples", "n_features", "n_directions", "repetitions", "workers", "f1_restarts", "kernel_pairs")
    @classmethod
    def positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v

    @field_validator("grid_size")
    @classmethod
    def grid_floor(cls, v: int) -> int:
        if v < 100:
            raise ValueError(f"grid size must be >= 100, got {v}")
        return v

    @field_validator("seed")
    @classmethod
    def seed_range(cls, v: int) -> int:
        if not 0 <= v < MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {v}")
        return v

    @field_validator("tilde_t_mode")
    @classmethod
    def known_t_mode(cls, v: str) -> str:
        if v not in TILDE_T_MODES:
            raise ValueError(f"must be one of {TILDE_T_MODES}, got {v!r}")
        return v

    @field_validator("alpha")
    @classmethod
    def non_negative_alpha(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"alpha must be >= 0, got {v}")
        return v

    @model_validator(mode="after")
    def check_ranges(self) -> "ExperimentConfig":
        if not self.dims:
            raise ValueError("no dimensions given")
        lo = min(self.dims)
        separation = self.experiment in (Experiment.IPM_SEPARATION, Experiment.SD_SEPARATION)
        floor = 3 if separation and self.k >= 2 else 2
        if lo < floor:
            raise ValueError(f"smallest dimension must be >= {floor} for this experiment, got {lo}")
        if separation and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.experiment == Experiment.SD_SEPARATION and abs(self.gamma) > 1.0:
            raise ValueError(f"gamma must lie in [-1, 1], got {self.gamma}")
        if self.clip_to_ball is not None and self.clip_to_ball <= 0:
            raise ValueError(f"clip radius must be positive, got {self.clip_to_ball}")
        if not self.shrunk_variance > 0:
            raise ValueError(f"shrunk variance must be positive, got {self.shrunk_variance}")
        return self

    @property
    def dimensions(self) -> List[int]:
        return sorted(set(self.dims))

    @property
    def activation(self) -> ActivationSpec:
        return ActivationSpec(alpha=self.alpha, a=self.a, b=self.b)


def build_config(**values: Any) -> ExperimentConfig:
    """
    Build an ExperimentConfig, filling unset sizes from settings.

    Raises:
        ConfigurationError: On any validation failure.
    """
    settings = get_settings()
    defaults = {
        "n_samples": settings.default_samples,
        "n_features": settings.default_features,
        "n_directions": settings.default_directions,
        "grid_size": settings.sd_grid_size,
        "repetitions": settings.default_repetitions,
        "workers": settings.workers,
    }
    merged = {**defaults, **{k: v for k, v in values.items() if v is not None}}
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        messages = [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()]
        raise ConfigurationError("Invalid experiment configuration:\n" + "\n".join(f"  - {m}" for m in messages))


# =============================================================================
# ROWS
# =============================================================================


@dataclass(frozen=True)
class ExperimentRow:
    """One (dimension, metric) line of the results table."""
    experiment: str
    dimension: int
    k: int
    metric: str
    mean: Optional[float]
    min: Optional[float]
    max: Optional[float]
    theory: Optional[float]
    n_samples: int
    n_features: int
    repetitions: int
    seed: int
    status: str = "ok"
    # Gibbs exponent, set on Stein discrepancy rows only
    gamma: Optional[float] = None

    def __post_init__(self) -> None:
        if self.status == "ok" and not (self.min <= self.mean <= self.max):
            raise ValueError(f"Row {self.metric}@{self.dimension}: need min <= mean <= max")

    @property
    def failed(self) -> bool:
        return self.status != "ok"


def summarize(values: Sequence[float]) -> Tuple[float, float, float]:
    """(mean, min, max), with the mean clamped into [min, max] against round-off."""
    array = np.asarray(values, dtype=float)
    lo, hi = float(array.min()), float(array.max())
    return min(max(math.fsum(array.tolist()) / array.size, lo), hi), lo, hi


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 0.0 if numerator == 0 else math.inf
    return numerator / denominator


def _row(
    config: ExperimentConfig,
    dimension: int,
    metric: str,
    values: Optional[Tuple[float, float, float]],
    theory: Optional[float] = None,
    n_features: int = 0,
    n_samples: Optional[int] = None,
    repetitions: Optional[int] = None,
) -> ExperimentRow:
    mean, lo, hi = values if values is not None else (None, None, None)
    return ExperimentRow(
        experiment=config.experiment.value,
        dimension=dimension,
        k=config.k,
        metric=metric,
        mean=mean,
        min=lo,
        max=hi,
        theory=theory,
        n_samples=config.n_samples if n_samples is None else n_samples,
        n_features=n_features,
        repetitions=config.repetitions if repetitions is None else repetitions,
        seed=config.seed,
        status="ok" if values is not None else "failed",
        gamma=config.gamma if config.experiment == Experiment.SD_SEPARATION else None,
    )


def _failed_rows(config: ExperimentConfig, dimension: int, metrics: Iterable[str], error: Exception) -> List[ExperimentRow]:
    logger.warning(f"{config.experiment.value} d={dimension} failed: {error}")
    return [_row(config, dimension, metric, None) for metric in metrics]


# =============================================================================
# REPETITIONS
# =============================================================================


def _run_repetitions(
    task, config: ExperimentConfig, dimension: int
) -> List[Dict[str, float]]:
    """
    Run task((config, dimension, repetition)) for every repetition, in
    parallel when config.workers > 1. Results come back in repetition order.
    Errors raised by a task are re-raised here.
    """
    args_list = [(config, dimension, r) for r in range(config.repetitions)]
    if config.workers == 1 or config.repetitions == 1:
        results = [task(args) for args in args_list]
    else:
        results = [None] * config.repetitions
        with ProcessPoolExecutor(max_workers=min(config.workers, config.repetitions)) as executor:
            futures = {executor.submit(task, args): args[2] for args in args_list}
            for future in as_completed(futures):
                results[futures[future]] = future.result()
    for r, result in enumerate(results):
        logger.debug(f"{config.experiment.value} d={dimension} rep {r}: {result}")
    return results


def _collect(results: List[Dict[str, float]], name: str) -> List[float]:
    return [result[name] for result in results]


# =============================================================================
# IPM SEPARATION
# =============================================================================

IPM_METRICS = ("f1_ipm", "f2_ipm", "ipm_ratio")


def _ipm_repetition(args: Tuple[ExperimentConfig, int, int]) -> Dict[str, float]:
    config, d, r = args
    seed = derive_seed(config.seed, d, r)
    spec = LegendrePairSpec.normalized(config.k, d)
    mu, nu = sample_legendre_pair(spec, config.n_samples, seed)
    axis = np.zeros(d)
    axis[-1] = 1.0
    act = config.activation
    return {
        "f1": ipm_f1_known_direction(mu, nu, act, axis),
        "f2": ipm_f2_features(mu, nu, act, config.n_features, seed),
    }


def run_ipm_separation(config: ExperimentConfig) -> List[ExperimentRow]:
    """
    F1 (direction e_d) and F2 (feature Monte Carlo) IPMs between mu_d and nu_d.

    The ratio row uses mean(F1)/mean(F2), with error bars
    min(F1)/max(F2) and max(F1)/min(F2).
    """
    if config.experiment != Experiment.IPM_SEPARATION:
        raise ConfigurationError(f"Expected an ipm_separation config, got {config.experiment.value}")
    rows: List[ExperimentRow] = []
    act = config.activation
    for d in config.dimensions:
        logger.info(f"IPM separation: k={config.k}, d={d}, {config.repetitions} repetitions")
        try:
            idx = LegendreIndex(config.k, d)
            results = _run_repetitions(_ipm_repetition, config, d)
            f1, f2 = _collect(results, "f1"), _collect(results, "f2")
            f1_mean, f1_min, f1_max = summarize(f1)
            f2_mean, f2_min, f2_max = summarize(f2)
            ratio = _ratio(f1_mean, f2_mean)
            ratio_bars = (
                min(_ratio(f1_min, f2_max), ratio),
                max(_ratio(f1_max, f2_min), ratio),
            )
            rows += [
                _row(config, d, "f1_ipm", (f1_mean, f1_min, f1_max), theoretical_f1_ipm(idx, act)),
                _row(config, d, "f2_ipm", (f2_mean, f2_min, f2_max), theoretical_f2_ipm(idx, act), config.n_features),
                _row(config, d, "ipm_ratio", (ratio, *ratio_bars), theoretical_ratio(idx), config.n_features),
            ]
        except RECOVERABLE_ERRORS as e:
            rows += _failed_rows(config, d, IPM_METRICS, e)
    return rows


# =============================================================================
# SD SEPARATION
# =============================================================================

SD_METRICS = ("sd_f1", "sd_f1_lower_bound", "sd_f2", "sd_f2_upper_bound", "sd_ratio")


def _sd_repetition(args: Tuple[ExperimentConfig, int, int]) -> Dict[str, float]:
    config, d, r = args
    spec = GibbsSpec(config.k, d, config.gamma)
    seed = derive_seed(config.seed, d, r)
    return {"f2": sd_f2_features(spec, config.activation, config.n_features, config.n_samples, seed)}


def run_sd_separation(config: ExperimentConfig) -> List[ExperimentRow]:
    """
    F1 Stein discrepancy by brute force and F2 by nested Monte Carlo, with
    their closed-form bounds. The F1 value and the bounds are deterministic
    and reported with repetitions = 1.
    """
    if config.experiment != Experiment.SD_SEPARATION:
        raise ConfigurationError(f"Expected an sd_separation config, got {config.experiment.value}")
    rows: List[ExperimentRow] = []
    act = config.activation
    for d in config.dimensions:
        logger.info(f"SD separation: k={config.k}, d={d}, gamma={config.gamma}")
        try:
            spec = GibbsSpec(config.k, d, config.gamma)
            f1 = sd_f1_brute_force(spec, act, config.grid_size)
            lower = sd_f1_lower_bound(spec, act)
            upper = sd_f2_upper_bound(spec, act)
            bound = sd_ratio_lower_bound(spec, act)
            f2 = _collect(_run_repetitions(_sd_repetition, config, d), "f2")
            f2_mean, f2_min, f2_max = summarize(f2)
            ratio = _ratio(f1, f2_mean)
            ratio_bars = (min(_ratio(f1, f2_max), ratio), max(_ratio(f1, f2_min), ratio))
            rows += [
                _row(config, d, "sd_f1", (f1, f1, f1), lower, n_samples=0, repetitions=1),
                _row(config, d, "sd_f1_lower_bound", (lower, lower, lower), lower, n_samples=0, repetitions=1),
                _row(config, d, "sd_f2", (f2_mean, f2_min, f2_max), upper, config.n_features),
                _row(config, d, "sd_f2_upper_bound", (upper, upper, upper), upper, n_samples=0, repetitions=1),
                _row(config, d, "sd_ratio", (ratio, *ratio_bars), bound, config.n_features),
            ]
        except RECOVERABLE_ERRORS as e:
            rows += _failed_rows(config, d, SD_METRICS, e)
    return rows


# =============================================================================
# GAUSSIAN METRICS
# =============================================================================


def gaussian_w1_axis(shrunk_variance: float) -> float:
    """W1 between N(0, 1) and N(0, s^2) on the line: |1 - s| sqrt(2/pi)."""
    return abs(1.0 - math.sqrt(shrunk_variance)) * math.sqrt(2.0 / math.pi)


def _gaussian_metrics(config: ExperimentConfig, d: int, seed: int, first, second) -> Dict[str, float]:
    act = config.activation
    lifted_first = lift_to_ball(first, config.clip_to_ball)
    lifted_second = lift_to_ball(second, config.clip_to_ball)
    axis = GaussianSpec(d, config.shrunk_variance).axis
    axis_feature = np.append(axis, 0.0)

    optimized = ipm_f1_optimize(
        lifted_first,
        lifted_second,
        act,
        restarts=config.f1_restarts,
        steps=config.f1_steps,
        seed=seed,
        candidates=[axis_feature],
    )
    return {
        "f1_ipm_optimized": optimized.objective,
        "f1_ipm_axis": ipm_f1_known_direction(lifted_first, lifted_second, act, axis_feature),
        "f2_ipm": ipm_f2_features(lifted_first, lifted_second, act, config.n_features, seed),
        "f2_tilde_ipm": ipm_f2_tilde(
            lifted_first, lifted_second, act, config.n_features, seed, config.tilde_t_mode, allow_unbounded=True
        ),
        "sliced_w1": sliced_w1(lifted_first, lifted_second, config.n_directions, seed),
        "max_sliced_w1": max_sliced_w1(lifted_first, lifted_second, KnownAxis(tuple(axis.tolist()))).objective,
    }


def _gaussian_repetition(args: Tuple[ExperimentConfig, int, int]) -> Dict[str, float]:
    config, d, r = args
    seed = derive_seed(config.seed, d, r)
    spec = GaussianSpec(d, config.shrunk_variance)
    standard, shrunk = sample_gaussian_pair(spec, config.n_samples, seed)
    baseline, _ = sample_gaussian_pair(spec, config.n_samples, derive_seed(config.seed, d, r, 1))
    pair = _gaussian_metrics(config, d, seed, standard, shrunk)
    noise = _gaussian_metrics(config, d, seed, standard, baseline)
    return {**pair, **{f"{name}_noise": value for name, value in noise.items()}}


def run_gaussian_metrics(config: ExperimentConfig) -> List[ExperimentRow]:
    """
    All five metrics between N(0, I_d) and the one-axis-shrunk Gaussian, and
    between two independent N(0, I_d) sample sets ("_noise" rows).

    F1/F2/F2-tilde act on the bias-lifted points (x, 1) and the sliced
    distances on their R^d part, so with clip_to_ball set every metric sees
    the same clipped measures.
    """
    if config.experiment != Experiment.GAUSSIAN_METRICS:
        raise ConfigurationError(f"Expected a gaussian_metrics config, got {config.experiment.value}")
    rows: List[ExperimentRow] = []
    metrics = list(GAUSSIAN_METRICS) + [f"{name}_noise" for name in GAUSSIAN_METRICS]
    unclipped = config.clip_to_ball is None
    theory: Dict[str, float] = {"max_sliced_w1_noise": 0.0}
    if unclipped:
        theory["max_sliced_w1"] = gaussian_w1_axis(config.shrunk_variance)
    if unclipped and config.activation.is_relu_family and config.alpha == 1:
        # E[(s Z)_+] = s / sqrt(2 pi)
        theory["f1_ipm_axis"] = (1.0 - math.sqrt(config.shrunk_variance)) / math.sqrt(2.0 * math.pi)
        theory["f1_ipm_axis_noise"] = 0.0
    features = {"f1_ipm_optimized": 0, "f1_ipm_axis": 0, "max_sliced_w1": 0, "sliced_w1": config.n_directions}

    for d in config.dimensions:
        logger.info(f"Gaussian metrics: d={d}, {config.repetitions} repetitions")
        try:
            results = _run_repetitions(_gaussian_repetition, config, d)
            for metric in metrics:
                base = metric.removesuffix("_noise")
                rows.append(
                    _row(
                        config,
                        d,
                        metric,
                        summarize(_collect(results, metric)),
                        theory.get(metric),
                        features.get(base, config.n_features),
                    )
                )
        except RECOVERABLE_ERRORS as e:
            rows += _failed_rows(config, d, metrics, e)
    return rows


# =============================================================================
# KERNEL CHECK
# =============================================================================


def run_kernel_check(config: ExperimentConfig) -> List[ExperimentRow]:
    """
    |z|-scores of the closed-form kernel against n_features-feature Monte Carlo
    on config.kernel_pairs random ball-lifted pairs per dimension and alpha.
    """
    if config.experiment != Experiment.KERNEL_CHECK:
        raise ConfigurationError(f"Expected a kernel_check config, got {config.experiment.value}")
    rows: List[ExperimentRow] = []
    results = kernel_check(config.dimensions, config.kernel_pairs, config.n_features, config.seed)
    for d in config.dimensions:
        for alpha in (0, 1):
            scores = [r.z_score for r in results if r.dimension == d and r.alpha == alpha]
            rows.append(
                _row(
                    config,
                    d,
                    f"kernel_alpha{alpha}_abs_z",
                    summarize(scores),
                    0.0,
                    config.n_features,
                    n_samples=2,
                    repetitions=config.kernel_pairs,
                )
            )
    return rows


RUNNERS = {
    Experiment.IPM_SEPARATION: run_ipm_separation,
    Experiment.SD_SEPARATION: run_sd_separation,
    Experiment.GAUSSIAN_METRICS: run_gaussian_metrics,
    Experiment.KERNEL_CHECK: run_kernel_check,
}


def run_experiment(config: ExperimentConfig) -> List[ExperimentRow]:
    """Dispatch to the runner of config.experiment."""
    return RUNNERS[config.experiment](config)


# =============================================================================
# CSV
# =============================================================================


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows: Iterable[ExperimentRow], out: Union[str, Path, TextIO]) -> None:
    """Write rows with the mandatory header; reals use 17 significant digits."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as f:
            write_csv(rows, f)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        values = asdict(row)
        writer.writerow([_format(values[column]) for column in CSV_COLUMNS])


def _parse_optional(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def read_csv(path: Union[str, Path, TextIO]) -> List[ExperimentRow]:
    """Read rows written by write_csv."""
    if isinstance(path, (str, Path)):
        with open(path, newline="", encoding="utf-8") as f:
            return read_csv(f)
    rows = []
    for record in csv.DictReader(path):
        rows.append(
            ExperimentRow(
                experiment=record["experiment"],
                dimension=int(record["dimension"]),
                k=int(record["k"]),
                metric=record["metric"],
                mean=_parse_optional(record["mean"]),
                min=_parse_optional(record["min"]),
                max=_parse_optional(record["max"]),
                theory=_parse_optional(record["theory"]),
                n_samples=int(record["n_samples"]),
                n_features=int(record["n_features"]),
                repetitions=int(record["repetitions"]),
                seed=int(record["seed"]),
                status=record["status"],
                gamma=_parse_optional(record.get("gamma") or ""),
            )
        )
    return rows


# =============================================================================
# PERSISTENCE
# =============================================================================


def persist_rows(config: ExperimentConfig, rows: Sequence[ExperimentRow], url: Optional[str] = None) -> int:
    """
    Store a finished run in the results database. Returns the run id.

    Raises:
        ConfigurationError: If no database URL is available.
    """
    engine = get_engine(url or config.db_url)
    init_database(engine)
    config_json = json.dumps(config.model_dump(mode="json", exclude={"out_csv", "out_plot", "db_url"}), sort_keys=True)
    status = "failed" if rows and all(row.failed for row in rows) else "completed"
    with get_session(engine) as session:
        run = insert_run(session, config.experiment.value, config_json, config.seed)
        insert_rows(session, run.id, rows)
        finish_run(session, run.id, status)
        run_id = run.id
    logger.info(f"Stored {len(rows)} rows as run {run_id}")
    return run_id

