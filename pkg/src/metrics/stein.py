"""
Stein discrepancies between the uniform measure on S^{d-1} and the Gibbs
measure with density proportional to exp(gamma L_{k,d}).

The score difference is gamma times the Riemannian gradient of L_{k,d}, so
every quantity below is linear in |gamma|. The F1 discrepancy reduces (by
Funk-Hecke and axial symmetry) to d one-dimensional suprema over t in
[-1, 1]: d - 1 identical off-axis terms and one term along e_d.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ..config import get_settings
from ..harmonics import (
    ActivationSpec,
    LegendreIndex,
    QuadratureRule,
    UnsupportedParameterError,
    lambda_coefficient,
    lambda_coefficient_quadrature,
    legendre_eval,
    legendre_harmonic_grad,
    log_harmonic_dimension,
)
from ..measures import GibbsSpec, RngSeed, derive_seed, rng_for, sample_uniform_sphere
from .base import SteinEstimate, SteinVariant, rows_per_chunk, uniform_directions

logger = logging.getLogger(__name__)

MIN_GRID_SIZE = 100

_SD_FEATURE_STREAM = 40
_SD_SAMPLE_STREAM = 41


def _prefactor(spec: GibbsSpec, act: ActivationSpec, rule: Optional[QuadratureRule] = None) -> float:
    # |a + (-1)^{k+1} b| |gamma| |lambda^{(alpha+1)}_{k,d}|
    parity = act.parity_factor(spec.k)
    if parity == 0:
        raise UnsupportedParameterError(
            f"a + (-1)^(k+1) b vanishes for k={spec.k}, a={act.a}, b={act.b}"
        )
    idx = spec.idx
    if rule is None:
        lam = lambda_coefficient(idx, act.alpha + 1)
    else:
        lam = lambda_coefficient_quadrature(idx, act.alpha + 1, rule)
    return parity * abs(spec.gamma) * abs(lam)


# =============================================================================
# F1: ONE-DIMENSIONAL SUPREMA
# =============================================================================


def _objectives(spec: GibbsSpec, act: ActivationSpec):
    k, d, alpha = spec.k, spec.d, act.alpha
    idx = spec.idx
    shifted = LegendreIndex(k - 1, d + 2)
    c = (d + alpha - 2) * (k + d - 2) / (d - 1)

    def off_axis(t: np.ndarray) -> np.ndarray:
        root = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
        return np.abs(
            -c * t * root * legendre_eval(shifted, t) + (d + k - 3) * root * legendre_eval(idx, t)
        )

    def axis(t: np.ndarray) -> np.ndarray:
        return np.abs(
            c * legendre_eval(shifted, t) * (1.0 - t**2) + (d + k - 3) * legendre_eval(idx, t) * t
        )

    return off_axis, axis


def grid_supremum(objective, grid_size: int) -> Tuple[float, float]:
    """
    max of objective over [-1, 1]: uniform grid, then bounded Brent refinement
    around the best grid point.

    Returns:
        (argmax, max)
    """
    grid = np.linspace(-1.0, 1.0, grid_size)
    values = objective(grid)
    best = int(np.argmax(values))
    best_t, best_value = float(grid[best]), float(values[best])

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_size - 1)]
    refined = minimize_scalar(
        lambda s: -float(objective(np.array([s]))[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if refined.success and -refined.fun > best_value:
        best_t, best_value = float(refined.x), float(-refined.fun)
    return best_t, best_value


def sd_f1_suprema(spec: GibbsSpec, act: ActivationSpec, grid_size: Optional[int] = None) -> Tuple[float, float]:
    """The off-axis and e_d-axis suprema (before the gamma/lambda prefactor)."""
    grid_size = grid_size or get_settings().sd_grid_size
    if grid_size < MIN_GRID_SIZE:
        raise ValueError(f"grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}")
    off_axis, axis = _objectives(spec, act)
    return grid_supremum(off_axis, grid_size)[1], grid_supremum(axis, grid_size)[1]


def sd_f1_brute_force_estimate(
    spec: GibbsSpec,
    act: ActivationSpec,
    grid_size: Optional[int] = None,
    rule: Optional[QuadratureRule] = None,
) -> SteinEstimate:
    grid_size = grid_size or get_settings().sd_grid_size
    if grid_size < MIN_GRID_SIZE:
        raise ValueError(f"grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}")
    if spec.gamma == 0:
        return SteinEstimate(0.0, SteinVariant.F1_BRUTE_FORCE, grid_size=grid_size)

    off, along = sd_f1_suprema(spec, act, grid_size)
    k, d = spec.k, spec.d
    value = _prefactor(spec, act, rule) * k / (act.alpha + 1) * math.sqrt((d - 1) * off**2 + along**2)
    logger.debug(f"SD F1 (k={k}, d={d}): off-axis sup {off:.6e}, axis sup {along:.6e}")
    return SteinEstimate(value, SteinVariant.F1_BRUTE_FORCE, grid_size=grid_size)


def sd_f1_brute_force(
    spec: GibbsSpec,
    act: ActivationSpec,
    grid_size: Optional[int] = None,
    rule: Optional[QuadratureRule] = None,
) -> float:
    """
    F1 Stein discrepancy between uniform and Gibbs measures.

    |a + (-1)^{k+1} b| |gamma| (k/(alpha+1)) |lambda^{(alpha+1)}_{k,d}|
    sqrt((d-1) sup_off^2 + sup_axis^2), with the suprema found on a uniform
    grid of grid_size points (>= 100) and refined. lambda comes from the
    closed form, or from `rule` by quadrature when one is given.

    Raises:
        UnsupportedParameterError: If a + (-1)^{k+1} b = 0.
        ValueError: If grid_size < 100.
    """
    return sd_f1_brute_force_estimate(spec, act, grid_size, rule).value


def sd_f1_lower_bound(spec: GibbsSpec, act: ActivationSpec) -> float:
    """|a + (-1)^{k+1} b| |gamma| |lambda^{(alpha+1)}_{k,d}| k (d+k-3) / (alpha+1), the t = 1 value."""
    if spec.gamma == 0:
        return 0.0
    return _prefactor(spec, act) * spec.k * (spec.d + spec.k - 3) / (act.alpha + 1)


# =============================================================================
# F2
# =============================================================================


def sd_f2_features_with_error(
    spec: GibbsSpec,
    act: ActivationSpec,
    n_features: int,
    n_samples: int,
    seed: RngSeed,
    workers: int = 1,
) -> SteinEstimate:
    """F2 Stein discrepancy by nested Monte Carlo, with the feature-sampling standard error."""
    if n_features < 1 or n_samples < 1:
        raise ValueError(f"Need n_features, n_samples >= 1, got {n_features}, {n_samples}")
    if spec.gamma == 0:
        return SteinEstimate(0.0, SteinVariant.F2_FEATURES, n_features=n_features, n_samples=n_samples)

    d = spec.d
    points = sample_uniform_sphere(d, n_samples, derive_seed(seed, _SD_SAMPLE_STREAM), workers).points
    features = uniform_directions(d, n_features, rng_for(seed, _SD_FEATURE_STREAM))

    # V[j] = mean_x grad L(x) sigma(<x, theta_j>), accumulated over row chunks
    moments = np.zeros((n_features, d))
    step = rows_per_chunk(n_features)
    for start in range(0, n_samples, step):
        block = points[start:start + step]
        _, gradient = legendre_harmonic_grad(spec.idx, block)
        moments += act(block @ features.T).T @ gradient
    moments /= n_samples

    squares = np.sum(moments**2, axis=1)
    value = abs(spec.gamma) * math.sqrt(float(squares.mean()))
    standard_error = 0.0
    if n_features > 1 and value > 0:
        se_square = float(squares.std(ddof=1) / math.sqrt(n_features))
        standard_error = spec.gamma**2 * se_square / (2.0 * value)
    return SteinEstimate(
        value,
        SteinVariant.F2_FEATURES,
        n_features=n_features,
        n_samples=n_samples,
        standard_error=standard_error,
    )


def sd_f2_features(
    spec: GibbsSpec,
    act: ActivationSpec,
    n_features: int,
    n_samples: int,
    seed: RngSeed,
    workers: int = 1,
) -> float:
    """
    |gamma| sqrt(sum_i mean_theta (mean_x grad_i L(x) sigma(<x,theta>))^2).

    x runs over n_samples uniform points on the sphere, theta over n_features
    uniform features; grad is the Riemannian gradient.
    """
    return sd_f2_features_with_error(spec, act, n_features, n_samples, seed, workers).value


def _upper_bound_root(idx: LegendreIndex, alpha: int) -> float:
    k, d = idx.k, idx.d
    two_over_n = math.exp(math.log(2.0) - log_harmonic_dimension(idx))
    off = k * (k + d - 2) * ((d + alpha - 2) / (alpha + 1)) ** 2
    along = (k * (d + k - 3) / (alpha + 1)) ** 2
    return math.sqrt(two_over_n * (off + along))


def sd_f2_upper_bound(spec: GibbsSpec, act: ActivationSpec) -> float:
    """
    |gamma| |lambda^{(alpha+1)}_{k,d}| sqrt((2/N_{k,d}) (k(k+d-2)((d+alpha-2)/(alpha+1))^2
    + (k(d+k-3)/(alpha+1))^2)), times |a + (-1)^{k+1} b|.
    """
    if spec.gamma == 0:
        return 0.0
    return _prefactor(spec, act) * _upper_bound_root(spec.idx, act.alpha)


def sd_ratio_lower_bound(spec: GibbsSpec, act: ActivationSpec) -> float:
    """
    sd_f1_lower_bound / sd_f2_upper_bound, evaluated without the common
    prefactor (so it stays defined when lambda or gamma vanish).
    """
    along = spec.k * (spec.d + spec.k - 3) / (act.alpha + 1)
    return along / _upper_bound_root(spec.idx, act.alpha)


def sd_log_ratio_asymptotic(idx: LegendreIndex) -> float:
    """(1/2)(k log((k+d-3)/k) + (d-2) log((k+d-3)/(d-2))), the leading growth of log N_{k,d} / 2."""
    k, d = idx.k, idx.d
    if k < 1:
        raise UnsupportedParameterError(f"Asymptotic ratio needs k >= 1, got {k}")
    total = k * math.log((k + d - 3) / k) if k + d - 3 > 0 else 0.0
    if d > 2:
        total += (d - 2) * math.log((k + d - 3) / (d - 2))
    return 0.5 * total
