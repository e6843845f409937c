"""
One-dimensional, sliced and max-sliced 1-Wasserstein distances.

Projections act on the un-lifted points (SampleSet.base_points). With equal
sample counts the 1-D distance is the mean gap between order statistics.
"""
import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from ..config import get_settings
from ..measures import RngSeed, SampleSet, rng_for
from .base import (
    DimensionMismatchError,
    DirectionResult,
    canonical_directions,
    check_pair,
    normalize_rows,
    uniform_directions,
)

logger = logging.getLogger(__name__)

_SLICED_STREAM = 30
_MAX_SLICED_STREAM = 31


def wasserstein_1d(xs: np.ndarray, ys: np.ndarray) -> float:
    """
    W1 between two empirical measures on the line with n atoms each.

    (1/n) sum_i |x_(i) - y_(i)|; inputs are sorted here if they are not already.

    Raises:
        DimensionMismatchError: If the lengths differ.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.shape != ys.shape:
        raise DimensionMismatchError(f"wasserstein_1d needs equal lengths, got {xs.size} and {ys.size}")
    return float(np.mean(np.abs(np.sort(xs) - np.sort(ys))))


def projected_w1(mu_points: np.ndarray, nu_points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """W1 between the projections onto each row of `directions`, chunked over directions."""
    if mu_points.shape[0] != nu_points.shape[0]:
        raise DimensionMismatchError(
            f"Sliced distances need equal sample counts, got {mu_points.shape[0]} and {nu_points.shape[0]}"
        )
    n = mu_points.shape[0]
    step = max(1, get_settings().chunk_size * 16 // n)
    values = np.empty(directions.shape[0])
    for start in range(0, directions.shape[0], step):
        block = directions[start:start + step]
        gaps = np.sort(mu_points @ block.T, axis=0) - np.sort(nu_points @ block.T, axis=0)
        values[start:start + step] = np.abs(gaps).mean(axis=0)
    return values


def sliced_w1_with_error(
    mu: SampleSet, nu: SampleSet, n_directions: int, seed: RngSeed
) -> Tuple[float, float]:
    """Sliced W1 and the standard error of the direction average."""
    if n_directions < 1:
        raise ValueError(f"n_directions must be >= 1, got {n_directions}")
    check_pair(mu, nu)
    if mu is nu:
        return 0.0, 0.0
    x, y = mu.base_points, nu.base_points
    directions = uniform_directions(x.shape[1], n_directions, rng_for(seed, _SLICED_STREAM))
    values = projected_w1(x, y, directions)
    standard_error = float(values.std(ddof=1) / np.sqrt(n_directions)) if n_directions > 1 else 0.0
    return float(values.mean()), standard_error


def sliced_w1(mu: SampleSet, nu: SampleSet, n_directions: int, seed: RngSeed) -> float:
    """Average of wasserstein_1d over uniform random projection directions."""
    return sliced_w1_with_error(mu, nu, n_directions, seed)[0]


@dataclass(frozen=True)
class KnownAxis:
    """Project onto one given direction."""
    direction: Tuple[float, ...]


@dataclass(frozen=True)
class GridOptimize:
    """Best of n_candidates uniform directions, the canonical axes and any extra candidates."""
    n_candidates: int
    seed: RngSeed = 0
    extra_candidates: Tuple[Tuple[float, ...], ...] = field(default=())


MaxSlicedMode = Union[KnownAxis, GridOptimize]


def max_sliced_w1(mu: SampleSet, nu: SampleSet, mode: MaxSlicedMode) -> DirectionResult:
    """
    Max-sliced W1, or a lower bound on it.

    KnownAxis evaluates the given direction; GridOptimize takes the best of
    its candidate set.
    """
    check_pair(mu, nu)
    x, y = mu.base_points, nu.base_points
    dim = x.shape[1]

    if isinstance(mode, KnownAxis):
        candidates = np.atleast_2d(np.asarray(mode.direction, dtype=float))
    else:
        pool = [canonical_directions(dim)]
        if mode.n_candidates > 0:
            pool.append(uniform_directions(dim, mode.n_candidates, rng_for(mode.seed, _MAX_SLICED_STREAM)))
        if mode.extra_candidates:
            pool.append(np.asarray(mode.extra_candidates, dtype=float))
        candidates = np.vstack(pool)

    if candidates.shape[1] != dim:
        raise DimensionMismatchError(f"Directions live in R^{candidates.shape[1]}, samples in R^{dim}")
    candidates = normalize_rows(candidates)

    if mu is nu:
        return DirectionResult(direction=candidates[0], objective=0.0)

    values = projected_w1(x, y, candidates)
    best = int(np.argmax(values))
    logger.debug(f"Max-sliced W1 over {candidates.shape[0]} directions: {values[best]:.6e}")
    return DirectionResult(direction=candidates[best], objective=float(values[best]))


def max_sliced_candidates(directions: Sequence[np.ndarray]) -> Tuple[Tuple[float, ...], ...]:
    """Freeze directions into the tuple form GridOptimize expects."""
    return tuple(tuple(float(v) for v in np.asarray(d, dtype=float)) for d in directions)


def base_direction(theta: np.ndarray) -> np.ndarray:
    """
    Unit direction in R^d of the feature part of a lifted feature theta in R^{d+1}.

    For 1-Lipschitz sigma, |int sigma(<(x,1),theta>) d(mu-nu)| is at most the
    1-D W1 along this direction, so adding it to a GridOptimize candidate set
    makes max-sliced dominate the F1 objective at theta.
    """
    feature = np.asarray(theta, dtype=float)[:-1]
    norm = np.linalg.norm(feature)
    if norm == 0:
        fallback = np.zeros_like(feature)
        fallback[0] = 1.0
        return fallback
    return feature / norm
