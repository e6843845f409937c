"""
Closed-form F2 kernels and the kernel (MMD) form of the F2 IPM.

For ReLU-family activations of degree alpha in {0, 1} and features theta
uniform on S^D,

    k(x, y) = E_theta[sigma(<x,theta>) sigma(<y,theta>)]
            = |x|^alpha |y|^alpha J_alpha(angle) / (2 pi E[r^{2 alpha}])

where J_0(a) = pi - a, J_1(a) = sin a + (pi - a) cos a is the arc-cosine
kernel integral for Gaussian weights and r is chi-distributed with D + 1
degrees of freedom, E[r^{2 alpha}] = 2^alpha Gamma((D+1)/2 + alpha) / Gamma((D+1)/2).
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from ..harmonics import ActivationSpec
from ..measures import RngSeed, SampleSet, rng_for, sample_unit_ball
from .base import (
    IpmEstimate,
    IpmVariant,
    UnsupportedKernelError,
    check_pair,
    rows_per_chunk,
    uniform_directions,
)

logger = logging.getLogger(__name__)

CLOSED_FORM_ALPHAS = (0, 1)
KERNEL_VARIANTS = ("plugin", "ustat")

_KERNEL_CHECK_STREAM = 20


def _check_alpha(alpha: int) -> None:
    if alpha not in CLOSED_FORM_ALPHAS:
        raise UnsupportedKernelError(
            f"No closed-form kernel for alpha={alpha}; use ipm_f2_features for the feature estimate"
        )


def chi_moment(alpha: int, n_coordinates: int) -> float:
    """E[r^{2 alpha}] for r chi-distributed with n_coordinates degrees of freedom."""
    m = n_coordinates / 2.0
    return math.exp(alpha * math.log(2.0) + gammaln(m + alpha) - gammaln(m))


def arccos_kernel_matrix(
    xs: np.ndarray, ys: np.ndarray, alpha: int, feature_dim: Optional[int] = None
) -> np.ndarray:
    """
    Kernel matrix k(x_i, y_j) under the uniform feature measure on S^{feature_dim}.

    feature_dim defaults to (number of columns) - 1. Rows with zero norm give 0.
    """
    _check_alpha(alpha)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    n_coordinates = (feature_dim + 1) if feature_dim is not None else xs.shape[1]

    norms_x = np.linalg.norm(xs, axis=1)
    norms_y = np.linalg.norm(ys, axis=1)
    outer = np.outer(norms_x, norms_y)
    safe = np.where(outer > 0, outer, 1.0)
    cosine = np.clip((xs @ ys.T) / safe, -1.0, 1.0)
    angle = np.arccos(cosine)

    if alpha == 0:
        j = np.pi - angle
        scale = np.ones_like(outer)
    else:
        j = np.sin(angle) + (np.pi - angle) * cosine
        scale = outer
    values = scale * j / (2.0 * np.pi * chi_moment(alpha, n_coordinates))
    return np.where(outer > 0, values, 0.0)


def arccos_kernel_uniform(
    x: np.ndarray, y: np.ndarray, alpha: int, feature_dim: Optional[int] = None
) -> float:
    """k(x, y) for two points; x = y and alpha = 0 gives 1/2, orthogonal points 1/4."""
    return float(arccos_kernel_matrix(x, y, alpha, feature_dim)[0, 0])


# =============================================================================
# MMD
# =============================================================================


def _block_sum(xs: np.ndarray, ys: np.ndarray, alpha: int) -> float:
    step = rows_per_chunk(ys.shape[0])
    return float(
        sum(arccos_kernel_matrix(xs[s:s + step], ys, alpha).sum() for s in range(0, xs.shape[0], step))
    )


def _block_trace(xs: np.ndarray, alpha: int) -> float:
    norms = np.linalg.norm(xs, axis=1)
    # k(x, x): angle 0, J_alpha(0) = pi
    return float(np.sum(norms ** (2 * alpha)) * np.pi / (2.0 * np.pi * chi_moment(alpha, xs.shape[1])))


def mmd_squared(mu: SampleSet, nu: SampleSet, alpha: int, variant: str = "plugin") -> float:
    """
    Squared MMD under the closed-form kernel.

    "plugin" averages over all pairs including the diagonal of the same-sample
    blocks; "ustat" drops those diagonals (unbiased, may be negative).
    """
    if variant not in KERNEL_VARIANTS:
        raise ValueError(f"variant must be one of {KERNEL_VARIANTS}, got {variant!r}")
    _check_alpha(alpha)
    check_pair(mu, nu)
    if mu is nu and variant == "plugin":
        return 0.0

    x, y = mu.points, nu.points
    n, m = x.shape[0], y.shape[0]
    sum_xx = _block_sum(x, x, alpha)
    sum_yy = _block_sum(y, y, alpha)
    sum_xy = _block_sum(x, y, alpha)

    if variant == "plugin":
        value = sum_xx / n**2 + sum_yy / m**2 - 2.0 * sum_xy / (n * m)
        # non-negative up to summation round-off
        return max(value, 0.0)

    if n < 2 or m < 2:
        raise ValueError("U-statistic MMD needs at least two samples per set")
    within_x = (sum_xx - _block_trace(x, alpha)) / (n * (n - 1))
    within_y = (sum_yy - _block_trace(y, alpha)) / (m * (m - 1))
    return within_x + within_y - 2.0 * sum_xy / (n * m)


def ipm_f2_kernel_estimate(
    mu: SampleSet, nu: SampleSet, alpha: int, variant: str = "plugin"
) -> IpmEstimate:
    value = mmd_squared(mu, nu, alpha, variant)
    if variant == "ustat":
        if value < 0:
            logger.debug(f"U-statistic MMD^2 is negative ({value:.3e}); reported as 0")
        return IpmEstimate(value, IpmVariant.F2_KERNEL_USTAT, mu.n)
    return IpmEstimate(math.sqrt(value) if value > 0 else 0.0, IpmVariant.F2_KERNEL_PLUGIN, mu.n)


def ipm_f2_kernel(mu: SampleSet, nu: SampleSet, alpha: int, variant: str = "plugin") -> float:
    """
    F2 IPM through the closed-form kernel (ReLU family, alpha in {0, 1}).

    Returns sqrt of the clamped plug-in MMD^2 for "plugin", and the raw
    signed MMD^2 for "ustat".

    Raises:
        UnsupportedKernelError: For alpha without a closed form.
    """
    return ipm_f2_kernel_estimate(mu, nu, alpha, variant).value


# =============================================================================
# VALIDATION AGAINST FEATURE MONTE CARLO
# =============================================================================


@dataclass(frozen=True)
class KernelCheckResult:
    """Closed form vs feature Monte Carlo for one pair of points."""
    dimension: int
    alpha: int
    closed_form: float
    mc_mean: float
    mc_standard_error: float

    @property
    def z_score(self) -> float:
        if self.mc_standard_error == 0:
            return 0.0 if self.closed_form == self.mc_mean else math.inf
        return abs(self.closed_form - self.mc_mean) / self.mc_standard_error


def kernel_mc(
    x: np.ndarray, y: np.ndarray, alpha: int, n_features: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Feature-average estimate of E[sigma(<x,theta>) sigma(<y,theta>)] and its standard error."""
    act = ActivationSpec.relu(alpha)
    features = uniform_directions(x.shape[0], n_features, rng)
    products = act(features @ x) * act(features @ y)
    return float(products.mean()), float(products.std(ddof=1) / math.sqrt(n_features))


def kernel_check(
    dims: Sequence[int],
    n_pairs: int,
    n_features: int,
    seed: RngSeed,
    alphas: Sequence[int] = CLOSED_FORM_ALPHAS,
) -> List[KernelCheckResult]:
    """
    Compare the closed-form kernel with feature Monte Carlo on random ball-lifted pairs.

    For each dimension d, `n_pairs` pairs (x, 1), (y, 1) with x, y uniform in
    the unit ball of R^d are drawn; features are uniform on S^d.
    """
    results = []
    for d in dims:
        for alpha in alphas:
            rng = rng_for(seed, _KERNEL_CHECK_STREAM, d, alpha)
            lifted = np.hstack([sample_unit_ball(d, 2 * n_pairs, rng), np.ones((2 * n_pairs, 1))])
            for x, y in zip(lifted[:n_pairs], lifted[n_pairs:]):
                mean, standard_error = kernel_mc(x, y, alpha, n_features, rng)
                results.append(
                    KernelCheckResult(d, alpha, arccos_kernel_uniform(x, y, alpha), mean, standard_error)
                )
            worst = max(r.z_score for r in results if r.dimension == d and r.alpha == alpha)
            logger.info(f"Kernel check d={d} alpha={alpha}: max |z| = {worst:.2f} over {n_pairs} pairs")
    return results
