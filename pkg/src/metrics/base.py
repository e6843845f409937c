"""
Result types, errors and the chunked moment kernels shared by the estimators.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..config import get_settings
from ..harmonics import ActivationSpec
from ..measures import RngSeed, SampleSet

logger = logging.getLogger(__name__)

# Elements of a (rows x features) block kept in memory per chunk, in units of chunk_size
BLOCK_FACTOR = 64


class DimensionMismatchError(ValueError):
    """Sample sets or directions of incompatible dimensions."""
    pass


class UnsupportedKernelError(ValueError):
    """No closed-form kernel for this activation; use ipm_f2_features instead."""
    pass


class SampleDomainError(ValueError):
    """Sample set lives on the wrong domain for this estimator."""
    pass


# =============================================================================
# RESULT TYPES
# =============================================================================


class IpmVariant(str, Enum):
    F1_KNOWN_DIRECTION = "f1_known_direction"
    F1_OPTIMIZED = "f1_optimized"
    F2_FEATURES = "f2_features"
    F2_KERNEL_PLUGIN = "f2_kernel_plugin"
    F2_KERNEL_USTAT = "f2_kernel_ustat"
    F2_TILDE = "f2_tilde"


class SteinVariant(str, Enum):
    F1_BRUTE_FORCE = "sd_f1_brute_force"
    F1_LOWER_BOUND = "sd_f1_lower_bound"
    F2_FEATURES = "sd_f2_features"
    F2_UPPER_BOUND = "sd_f2_upper_bound"


@dataclass(frozen=True)
class IpmEstimate:
    """
    An IPM estimate with its Monte Carlo standard error.

    Only the U-statistic kernel variant may be negative; it is stored raw and
    clamped when reported.
    """
    value: float
    variant: IpmVariant
    n_samples: int
    n_features: int = 0
    seed: Optional[RngSeed] = None
    standard_error: float = 0.0

    def __post_init__(self) -> None:
        if self.variant != IpmVariant.F2_KERNEL_USTAT and self.value < 0:
            raise ValueError(f"{self.variant.value} estimate must be non-negative, got {self.value}")

    @property
    def reported(self) -> float:
        return max(self.value, 0.0)


@dataclass(frozen=True)
class SteinEstimate:
    """A Stein discrepancy value (estimated or closed-form bound)."""
    value: float
    variant: SteinVariant
    grid_size: int = 0
    n_features: int = 0
    n_samples: int = 0
    standard_error: float = 0.0


@dataclass(frozen=True)
class DirectionResult:
    """Best direction found by a search, with the objective there (a lower bound on the supremum)."""
    direction: np.ndarray
    objective: float

    def __post_init__(self) -> None:
        direction = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-10:
            raise ValueError(f"Direction must be a unit vector, got norm {np.linalg.norm(direction)}")
        object.__setattr__(self, "direction", direction)


# =============================================================================
# HELPERS
# =============================================================================


def check_pair(mu: SampleSet, nu: SampleSet) -> int:
    """Return the common column count of mu and nu."""
    if mu.dim != nu.dim:
        raise DimensionMismatchError(f"Sample sets have dimensions {mu.dim} and {nu.dim}")
    if mu.domain != nu.domain:
        raise SampleDomainError(f"Sample sets live on {mu.domain.value} and {nu.domain.value}")
    return mu.dim


def normalize_rows(directions: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    return directions / np.where(norms > 0, norms, 1.0)


def uniform_directions(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform unit vectors in R^dim."""
    return normalize_rows(rng.standard_normal((n, dim)))


def canonical_directions(dim: int) -> np.ndarray:
    """The 2*dim directions +-e_i."""
    eye = np.eye(dim)
    return np.vstack([eye, -eye])


def rows_per_chunk(n_columns: int) -> int:
    return max(1, (get_settings().chunk_size * BLOCK_FACTOR) // max(n_columns, 1))


def feature_means(points: np.ndarray, features: np.ndarray, act: ActivationSpec) -> np.ndarray:
    """
    mean_i sigma(<x_i, theta_j>) for every feature theta_j.

    Rows of `points` are processed in chunks in a fixed order so the result
    does not depend on memory settings beyond floating-point summation order.
    """
    n = points.shape[0]
    step = rows_per_chunk(features.shape[0])
    total = np.zeros(features.shape[0])
    for start in range(0, n, step):
        total += act(points[start:start + step] @ features.T).sum(axis=0)
    return total / n


def moment_differences(
    mu: SampleSet, nu: SampleSet, features: np.ndarray, act: ActivationSpec
) -> np.ndarray:
    """Per-feature generalized moment difference mean_mu sigma(<x,theta>) - mean_nu sigma(<y,theta>)."""
    if mu is nu:
        return np.zeros(features.shape[0])
    return feature_means(mu.points, features, act) - feature_means(nu.points, features, act)


def root_mean_square(differences: np.ndarray) -> Tuple[float, float]:
    """sqrt(mean D_j^2) and its delta-method standard error over features."""
    squares = differences**2
    mean_square = float(squares.mean())
    value = float(np.sqrt(mean_square))
    if squares.shape[0] < 2 or value == 0.0:
        return value, 0.0
    se_square = float(squares.std(ddof=1) / np.sqrt(squares.shape[0]))
    return value, se_square / (2.0 * value)
