"""
IPM estimators for the F1, F2 and F2-tilde unit balls.

For neuron features sigma(<x, theta>) the three distances are

    F1:        sup_theta |int sigma(<x,theta>) d(mu - nu)|
    F2:        sqrt(E_{theta ~ tau} (int sigma(<x,theta>) d(mu - nu))^2)
    F2-tilde:  same with the arcsine-reweighted feature measure tau-tilde

evaluated on empirical measures. The F1 supremum is only ever approximated
from below (a fixed direction or a finite search).
"""
import logging
from typing import Optional, Sequence

import numpy as np

from ..harmonics import ActivationSpec
from ..measures import Domain, RngSeed, SampleSet, rng_for
from .base import (
    DimensionMismatchError,
    DirectionResult,
    IpmEstimate,
    IpmVariant,
    SampleDomainError,
    canonical_directions,
    check_pair,
    feature_means,
    moment_differences,
    normalize_rows,
    root_mean_square,
    uniform_directions,
)

logger = logging.getLogger(__name__)

TILDE_T_MODES = ("arcsine", "uniform")

# Stream ids for rng_for; keep them distinct across estimators
_F1_STREAM = 10
_F2_STREAM = 11
_TILDE_STREAM = 12


# =============================================================================
# F1
# =============================================================================


def ipm_f1_known_direction_with_error(
    mu: SampleSet, nu: SampleSet, act: ActivationSpec, theta: np.ndarray
) -> IpmEstimate:
    """|mean sigma(<x,theta>) over mu - mean over nu| and its sampling standard error."""
    dim = check_pair(mu, nu)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dim,):
        raise DimensionMismatchError(f"Direction has shape {theta.shape}, samples live in R^{dim}")
    if mu is nu:
        return IpmEstimate(0.0, IpmVariant.F1_KNOWN_DIRECTION, mu.n)

    values_mu = act(mu.points @ theta)
    values_nu = act(nu.points @ theta)
    value = abs(float(values_mu.mean() - values_nu.mean()))
    standard_error = float(np.sqrt(values_mu.var() / mu.n + values_nu.var() / nu.n))
    return IpmEstimate(value, IpmVariant.F1_KNOWN_DIRECTION, mu.n, standard_error=standard_error)


def ipm_f1_known_direction(
    mu: SampleSet, nu: SampleSet, act: ActivationSpec, theta: np.ndarray
) -> float:
    """
    F1 IPM lower bound from a single feature direction.

    Exact (up to sampling noise) when theta is the maximizing direction, e.g.
    e_d for the signed-Legendre pair.
    """
    return ipm_f1_known_direction_with_error(mu, nu, act, theta).value


def _objective_and_gradient(
    mu: SampleSet, nu: SampleSet, act: ActivationSpec, theta: np.ndarray
):
    projection_mu = mu.points @ theta
    projection_nu = nu.points @ theta
    difference = act(projection_mu).mean() - act(projection_nu).mean()
    sign = 1.0 if difference >= 0 else -1.0
    gradient = sign * (
        act.derivative(projection_mu) @ mu.points / mu.n
        - act.derivative(projection_nu) @ nu.points / nu.n
    )
    return abs(float(difference)), gradient


def ipm_f1_optimize(
    mu: SampleSet,
    nu: SampleSet,
    act: ActivationSpec,
    restarts: int = 8,
    steps: int = 100,
    seed: RngSeed = 0,
    step_size: float = 0.5,
    candidates: Optional[Sequence[np.ndarray]] = None,
) -> DirectionResult:
    """
    Search for the F1 maximizing direction.

    Each of `restarts` uniform random starts is refined by projected gradient
    ascent on the empirical objective (the subgradient at the kink of sigma is
    the right derivative) with step size step_size / sqrt(1 + iteration).
    The canonical directions +-e_i and any extra `candidates` are evaluated
    as they are. The returned objective is a lower bound on the F1 IPM.

    Args:
        mu: First sample set
        nu: Second sample set, same domain and dimension
        act: Activation
        restarts: Number of random starts (>= 1)
        steps: Gradient steps per start
        seed: Seed for the random starts
        step_size: Initial step size
        candidates: Extra directions to evaluate

    Returns:
        DirectionResult with the best direction and objective
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    dim = check_pair(mu, nu)

    pool = [canonical_directions(dim)]
    if candidates is not None and len(candidates):
        extra = np.atleast_2d(np.asarray(candidates, dtype=float))
        if extra.shape[1] != dim:
            raise DimensionMismatchError(f"Candidates live in R^{extra.shape[1]}, samples in R^{dim}")
        pool.append(normalize_rows(extra))
    fixed = np.vstack(pool)

    if mu is nu:
        return DirectionResult(direction=fixed[0], objective=0.0)

    objectives = np.abs(
        feature_means(mu.points, fixed, act) - feature_means(nu.points, fixed, act)
    )
    best_index = int(np.argmax(objectives))
    best_direction, best_objective = fixed[best_index], float(objectives[best_index])

    starts = uniform_directions(dim, restarts, rng_for(seed, _F1_STREAM))
    for restart, theta in enumerate(starts):
        for step in range(steps + 1):
            objective, gradient = _objective_and_gradient(mu, nu, act, theta)
            if objective > best_objective:
                best_direction, best_objective = theta.copy(), objective
            if step == steps:
                break
            # projected step: drop the radial part, move, renormalize
            tangent = gradient - (gradient @ theta) * theta
            if not np.any(tangent):
                break
            theta = theta + step_size / np.sqrt(1.0 + step) * tangent
            theta = theta / np.linalg.norm(theta)
        logger.debug(f"F1 search restart {restart}: best objective so far {best_objective:.6e}")

    return DirectionResult(direction=best_direction, objective=best_objective)


# =============================================================================
# F2
# =============================================================================


def ipm_f2_features_with_error(
    mu: SampleSet, nu: SampleSet, act: ActivationSpec, n_features: int, seed: RngSeed
) -> IpmEstimate:
    """F2 IPM by feature Monte Carlo, with the feature-sampling standard error."""
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    dim = check_pair(mu, nu)
    features = uniform_directions(dim, n_features, rng_for(seed, _F2_STREAM))
    value, standard_error = root_mean_square(moment_differences(mu, nu, features, act))
    return IpmEstimate(
        value, IpmVariant.F2_FEATURES, mu.n, n_features, seed, standard_error=standard_error
    )


def ipm_f2_features(
    mu: SampleSet, nu: SampleSet, act: ActivationSpec, n_features: int, seed: RngSeed
) -> float:
    """
    sqrt((1/F) sum_j (mean_mu sigma(<x,theta_j>) - mean_nu sigma(<y,theta_j>))^2).

    theta_j are i.i.d. uniform on the unit sphere of the sample space (S^d for
    lifted samples in R^{d+1}).
    """
    return ipm_f2_features_with_error(mu, nu, act, n_features, seed).value


# =============================================================================
# F2-TILDE
# =============================================================================


def sample_tilde_features(
    base_dim: int, n: int, rng: np.random.Generator, t_mode: str = "arcsine"
) -> np.ndarray:
    """
    Features theta = (sqrt(1-t^2) xi, t) in R^{base_dim+1} with xi uniform on S^{base_dim-1}.

    t_mode "arcsine" draws t = sin(g) with g uniform on [-pi/2, pi/2], which is
    exactly tau-tilde; "uniform" draws t uniform on [-1, 1].
    """
    if t_mode not in TILDE_T_MODES:
        raise ValueError(f"t_mode must be one of {TILDE_T_MODES}, got {t_mode!r}")
    xi = uniform_directions(base_dim, n, rng)
    if t_mode == "arcsine":
        angle = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=n)
        t, radial = np.sin(angle), np.cos(angle)
    else:
        t = rng.uniform(-1.0, 1.0, size=n)
        radial = np.sqrt(1.0 - t**2)
    return np.column_stack([radial[:, None] * xi, t])


def ipm_f2_tilde_with_error(
    mu: SampleSet,
    nu: SampleSet,
    act: ActivationSpec,
    n_features: int,
    seed: RngSeed,
    t_mode: str = "arcsine",
    allow_unbounded: bool = False,
) -> IpmEstimate:
    """F2-tilde IPM by feature Monte Carlo, with the feature-sampling standard error."""
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    dim = check_pair(mu, nu)
    allowed = (Domain.BALL_LIFT, Domain.BIAS_LIFT) if allow_unbounded else (Domain.BALL_LIFT,)
    if mu.domain not in allowed:
        raise SampleDomainError(
            f"F2-tilde needs samples in {', '.join(d.value for d in allowed)}, got {mu.domain.value}"
        )
    features = sample_tilde_features(dim - 1, n_features, rng_for(seed, _TILDE_STREAM), t_mode)
    value, standard_error = root_mean_square(moment_differences(mu, nu, features, act))
    return IpmEstimate(value, IpmVariant.F2_TILDE, mu.n, n_features, seed, standard_error=standard_error)


def ipm_f2_tilde(
    mu: SampleSet,
    nu: SampleSet,
    act: ActivationSpec,
    n_features: int,
    seed: RngSeed,
    t_mode: str = "arcsine",
    allow_unbounded: bool = False,
) -> float:
    """
    F2-tilde IPM between ball-lifted sample sets.

    `allow_unbounded` also accepts bias-lifted sets outside the unit ball
    (used for the unclipped Gaussian comparison).
    """
    return ipm_f2_tilde_with_error(mu, nu, act, n_features, seed, t_mode, allow_unbounded).value
