"""
Small, seeded sample sets for tests.

Real samplers live in src.measures; these factories build hand-sized inputs
(point masses, random ball pairs, rotated copies) whose metric values are
known or easy to brute-force.
"""
from typing import Optional, Tuple

import numpy as np
from scipy.stats import special_ortho_group

from src.measures import Domain, SampleSet


def point_mass(point, domain: Domain = Domain.SPHERE, copies: int = 1) -> SampleSet:
    """Empirical measure with all mass at one point."""
    row = np.asarray(point, dtype=float)
    return SampleSet(points=np.tile(row, (copies, 1)), domain=domain)


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Haar-random rotation matrix in SO(dim)."""
    if dim == 1:
        return np.ones((1, 1))
    return special_ortho_group.rvs(dim, random_state=seed)


def rotate(samples: SampleSet, rotation: np.ndarray) -> SampleSet:
    """Apply a rotation to the base coordinates, keeping any bias coordinate."""
    if samples.is_lifted:
        rotated = samples.base_points @ rotation.T
        points = np.column_stack([rotated, np.ones(samples.n)])
    else:
        points = samples.points @ rotation.T
    return SampleSet(points=points, domain=samples.domain, seed=samples.seed)


class SampleGenerator:
    """
    Generates reproducible sample sets for testing.

    Uses a seeded numpy Generator for reproducibility in tests.
    """

    def __init__(self, seed: Optional[int] = None):
        """
        Initialize the generator.

        Args:
            seed: Random seed for reproducible generation
        """
        self._rng = np.random.default_rng(seed)

    def sphere(self, d: int, n: int) -> SampleSet:
        """n uniform points on S^{d-1}."""
        gaussian = self._rng.standard_normal((n, d))
        return SampleSet(points=gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True))

    def ball(self, d: int, n: int) -> np.ndarray:
        """n uniform points in the unit ball of R^d."""
        directions = self._rng.standard_normal((n, d))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        return directions * self._rng.random(n)[:, None] ** (1.0 / d)

    def ball_lift(self, d: int, n: int) -> SampleSet:
        """n points (x, 1) with x uniform in the unit ball."""
        return SampleSet(points=np.column_stack([self.ball(d, n), np.ones(n)]), domain=Domain.BALL_LIFT)

    def ball_lift_pair(self, d: int, n: int) -> Tuple[SampleSet, SampleSet]:
        """Two independent ball-lifted discrete measures with n atoms each."""
        return self.ball_lift(d, n), self.ball_lift(d, n)

    def euclidean(self, d: int, n: int, scale: float = 1.0) -> SampleSet:
        """n standard Gaussian points in R^d, times scale."""
        return SampleSet(points=scale * self._rng.standard_normal((n, d)), domain=Domain.EUCLIDEAN)

    def unit_vector(self, d: int) -> np.ndarray:
        v = self._rng.standard_normal(d)
        return v / np.linalg.norm(v)
