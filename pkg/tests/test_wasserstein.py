"""
Tests for 1-D, sliced and max-sliced W1.
"""
import math

import numpy as np
import pytest

from src.harmonics import ActivationSpec
from src.measures import GaussianSpec, lift_to_ball, sample_discrete_ball_pair, sample_gaussian_pair
from src.metrics import (
    DimensionMismatchError,
    GridOptimize,
    KnownAxis,
    ipm_f1_optimize,
    ipm_f2_tilde_with_error,
    max_sliced_w1,
    sliced_w1,
    sliced_w1_with_error,
    wasserstein_1d,
)
from src.metrics.wasserstein import base_direction, max_sliced_candidates
from tests.mocks import random_rotation, rotate

GAUSSIAN_AXIS_W1 = (1 - math.sqrt(0.1)) * math.sqrt(2 / math.pi)


class TestWasserstein1d:
    """Tests for the order-statistic formula."""

    def test_shifted_atoms(self):
        assert wasserstein_1d([0.0, 1.0], [0.5, 1.5]) == pytest.approx(0.5)

    def test_unsorted_input(self):
        assert wasserstein_1d([1.0, 0.0], [1.5, 0.5]) == pytest.approx(0.5)

    def test_identical(self):
        assert wasserstein_1d([3.0, -1.0, 2.0], [2.0, 3.0, -1.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            wasserstein_1d([0.0, 1.0], [0.0])


class TestSliced:
    """Tests for the random-projection average."""

    def test_zero_law(self, generator):
        mu = generator.sphere(4, 50)
        assert sliced_w1(mu, mu, 100, seed=0) == 0.0

    def test_lift_is_ignored(self, generator):
        """Projections act on the base points only."""
        mu, nu = generator.euclidean(3, 200), generator.euclidean(3, 200, scale=2.0)
        plain = sliced_w1(mu, nu, 300, seed=4)
        assert sliced_w1(lift_to_ball(mu), lift_to_ball(nu), 300, seed=4) == plain

    def test_scale_in_one_dimension(self, generator):
        """In R^1 every direction is +-1, so sliced W1 is the 1-D distance."""
        mu, nu = generator.euclidean(1, 100), generator.euclidean(1, 100, scale=3.0)
        assert sliced_w1(mu, nu, 10, seed=1) == pytest.approx(wasserstein_1d(mu.points, nu.points))

    def test_standard_error(self, generator):
        mu, nu = generator.sphere(3, 100), generator.sphere(3, 100)
        value, standard_error = sliced_w1_with_error(mu, nu, 500, seed=2)
        assert value > 0
        assert 0 < standard_error < value

    def test_bad_direction_count(self, generator):
        mu = generator.sphere(3, 10)
        with pytest.raises(ValueError):
            sliced_w1(mu, mu, 0, seed=0)

    def test_unequal_counts(self, generator):
        with pytest.raises(DimensionMismatchError):
            sliced_w1(generator.sphere(3, 10), generator.sphere(3, 11), 10, seed=0)


class TestMaxSliced:
    """Tests for the known-axis and grid modes."""

    def test_gaussian_axis(self):
        """N(0,1) vs N(0,0.1) on the line: |1 - sqrt(0.1)| sqrt(2/pi)."""
        mu, nu = sample_gaussian_pair(GaussianSpec(d=8), 100_000, seed=12)
        result = max_sliced_w1(mu, nu, KnownAxis(tuple(np.eye(8)[-1])))
        assert GAUSSIAN_AXIS_W1 == pytest.approx(0.5456, abs=1e-4)
        assert result.objective == pytest.approx(GAUSSIAN_AXIS_W1, abs=0.01)

    def test_grid_finds_shrunk_axis(self):
        mu, nu = sample_gaussian_pair(GaussianSpec(d=4), 20_000, seed=13)
        result = max_sliced_w1(mu, nu, GridOptimize(n_candidates=200, seed=1))
        assert abs(result.direction[-1]) == pytest.approx(1.0)
        assert result.objective == pytest.approx(GAUSSIAN_AXIS_W1, abs=0.02)

    def test_rotation_invariance(self, generator):
        mu, nu = generator.euclidean(5, 300), generator.euclidean(5, 300, scale=0.5)
        direction = generator.unit_vector(5)
        rotation = random_rotation(5, seed=3)
        before = max_sliced_w1(mu, nu, KnownAxis(tuple(direction))).objective
        after = max_sliced_w1(rotate(mu, rotation), rotate(nu, rotation), KnownAxis(tuple(rotation @ direction))).objective
        assert after == pytest.approx(before, rel=1e-10)

    def test_sliced_below_max_sliced(self, generator):
        mu, nu = generator.euclidean(3, 500), generator.euclidean(3, 500, scale=0.7)
        assert sliced_w1(mu, nu, 500, seed=5) <= max_sliced_w1(mu, nu, GridOptimize(500, seed=5)).objective

    def test_direction_mismatch(self, generator):
        mu = generator.sphere(3, 10)
        with pytest.raises(DimensionMismatchError):
            max_sliced_w1(mu, mu, KnownAxis((1.0, 0.0)))

    def test_zero_law(self, generator):
        mu = generator.sphere(3, 10)
        assert max_sliced_w1(mu, mu, GridOptimize(10)).objective == 0.0


class TestSandwich:
    """F1 with a 1-Lipschitz activation is dominated by max-sliced W1."""

    def test_f1_below_max_sliced(self, generator):
        mu, nu = generator.ball_lift(3, 400), generator.ball_lift(3, 400)
        f1 = ipm_f1_optimize(mu, nu, ActivationSpec.relu(), restarts=4, steps=30, seed=1)
        extra = max_sliced_candidates([base_direction(f1.direction)])
        bound = max_sliced_w1(mu, nu, GridOptimize(n_candidates=50, seed=1, extra_candidates=extra))
        assert f1.objective <= bound.objective + 1e-12

    def test_base_direction(self):
        np.testing.assert_allclose(base_direction(np.array([0.0, 0.6, 0.8])), [0.0, 1.0])
        np.testing.assert_array_equal(base_direction(np.array([0.0, 0.0, 1.0])), [1.0, 0.0])


def _ball_instances():
    """20 random discrete pairs in the unit-ball lift plus the unit-clipped Gaussian pair."""
    for seed in range(20):
        yield sample_discrete_ball_pair(2 + seed % 5, 150, seed=seed)
    standard, shrunk = sample_gaussian_pair(GaussianSpec(d=4), 3000, seed=21)
    yield lift_to_ball(standard, 1.0), lift_to_ball(shrunk, 1.0)


class TestBallBounds:
    """Upper bounds between the network distances and sliced W1 on the unit ball."""

    def test_tilde_f2_squared_below_sliced(self):
        """pi F2-tilde^2 <= sliced W1, up to three combined standard errors."""
        relu = ActivationSpec.relu()
        for i, (mu, nu) in enumerate(_ball_instances()):
            tilde = ipm_f2_tilde_with_error(mu, nu, relu, 2000, seed=i)
            sliced, sliced_error = sliced_w1_with_error(mu, nu, 2000, seed=i)
            # delta method for the square of the F2-tilde estimate
            squared_error = 2.0 * math.pi * tilde.value * tilde.standard_error
            margin = 3.0 * math.hypot(squared_error, sliced_error)
            assert math.pi * tilde.value**2 <= sliced + margin

    def test_f1_below_max_sliced_with_shared_candidates(self):
        relu = ActivationSpec.relu()
        for i, (mu, nu) in enumerate(_ball_instances()):
            f1 = ipm_f1_optimize(mu, nu, relu, restarts=2, steps=20, seed=i)
            extra = max_sliced_candidates([base_direction(f1.direction)])
            bound = max_sliced_w1(mu, nu, GridOptimize(n_candidates=50, seed=i, extra_candidates=extra))
            assert f1.objective <= bound.objective + 1e-12
