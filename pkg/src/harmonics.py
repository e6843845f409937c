"""
Special functions on the sphere.

Legendre polynomials P_{k,d} (orthogonal on [-1,1] under the weight
(1-t^2)^{(d-3)/2}, normalized so that P_{k,d}(1) = 1), Legendre harmonics
L_{k,d}(x) = |x|^k P_{k,d}(<e_d, x>/|x|), harmonic dimensions N_{k,d},
weighted Gauss-Jacobi quadrature and the Funk-Hecke coefficients of
positively homogeneous activations.

Every function here is pure; arrays are accepted wherever a scalar t or a
single point is.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import betaln, gammaln, roots_jacobi, roots_legendre

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Slack allowed on |t| <= 1 and on unit norms before raising
T_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12


# =============================================================================
# ERRORS
# =============================================================================


class DomainError(ValueError):
    """Argument outside the domain of a special function."""
    pass


class DegenerateIntegralError(ArithmeticError):
    """A normalizing integral underflowed to zero."""
    pass


class UnsupportedParameterError(ValueError):
    """Parameter combination not covered by the implementation."""
    pass


# =============================================================================
# DOMAIN TYPES
# =============================================================================


@dataclass(frozen=True)
class LegendreIndex:
    """Degree k and ambient dimension d of P_{k,d} / L_{k,d}."""
    k: int
    d: int

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 0:
            raise DomainError(f"Degree k must be a non-negative integer, got {self.k}")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"Dimension d must be an integer >= 2, got {self.d}")

    @property
    def beta(self) -> float:
        """Exponent (d-3)/2 of the weight (1-t^2)^beta."""
        return (self.d - 3) / 2.0

    def shifted(self, dk: int = 0, dd: int = 0) -> "LegendreIndex":
        return LegendreIndex(self.k + dk, self.d + dd)


@dataclass(frozen=True)
class ActivationSpec:
    """
    Alpha-positive-homogeneous activation sigma(x) = a (x)_+^alpha + b (-x)_+^alpha.

    alpha = 0 gives step functions, alpha = 1 with (a, b) = (1, 0) is the ReLU.
    """
    alpha: int = 1
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self) -> None:
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise UnsupportedParameterError(
                f"Homogeneity degree alpha must be a non-negative integer, got {self.alpha}"
            )

    @classmethod
    def relu(cls, alpha: int = 1) -> "ActivationSpec":
        return cls(alpha=alpha, a=1.0, b=0.0)

    @property
    def is_relu_family(self) -> bool:
        return self.a == 1.0 and self.b == 0.0

    def __call__(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        positive = np.where(x > 0, np.abs(x) ** self.alpha, 0.0)
        negative = np.where(x < 0, np.abs(x) ** self.alpha, 0.0)
        return self.a * positive + self.b * negative

    def derivative(self, x: ArrayLike) -> np.ndarray:
        """Right derivative of sigma (the subgradient used at the kink)."""
        x = np.asarray(x, dtype=float)
        if self.alpha == 0:
            return np.zeros_like(x)
        power = np.abs(x) ** (self.alpha - 1)
        right = np.where(x >= 0, self.alpha * power, 0.0)
        left = np.where(x < 0, -self.alpha * power, 0.0)
        return self.a * right + self.b * left

    def sup_abs(self) -> float:
        """sup |sigma| over [-1, 1]."""
        return max(abs(self.a), abs(self.b))

    def parity_factor(self, k: int) -> float:
        """|a + (-1)^{k+1} b|, the factor a degree-k harmonic picks up."""
        return abs(self.a + (-1) ** (k + 1) * self.b)


@dataclass(frozen=True)
class QuadratureRule:
    """
    Gauss rule of a given order.

    `nodes`/`weights` form the Gauss-Legendre rule on [-1, 1] (exact for
    polynomials of degree 2*order - 1 against dt). Weighted integrals use
    Gauss-Jacobi nodes built per sub-interval from the same order, with the
    endpoint singularities of (1-t^2)^{(d-3)/2} folded into the weight.
    """
    order: int = 256
    nodes: Tuple[float, ...] = field(init=False, repr=False)
    weights: Tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.order < 1:
            raise DomainError(f"Quadrature order must be positive, got {self.order}")
        nodes, weights = _jacobi_rule(self.order, 0.0, 0.0)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Plain integral of f over [-1, 1] against dt."""
        nodes = np.asarray(self.nodes)
        return float(np.dot(np.asarray(self.weights), f(nodes)))


@lru_cache(maxsize=256)
def _jacobi_rule(order: int, a: float, b: float) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Gauss-Jacobi nodes/weights for (1-s)^a (1+s)^b on [-1, 1], cached and immutable."""
    if a == 0.0 and b == 0.0:
        nodes, weights = roots_legendre(order)
    else:
        nodes, weights = roots_jacobi(order, a, b)
    return tuple(nodes.tolist()), tuple(weights.tolist())


def default_rule() -> QuadratureRule:
    """Rule with the configured number of nodes."""
    from .config import get_settings

    return gauss_jacobi_rule(get_settings().quadrature_nodes)


@lru_cache(maxsize=32)
def gauss_jacobi_rule(order: int = 256) -> QuadratureRule:
    return QuadratureRule(order=order)


# =============================================================================
# LEGENDRE POLYNOMIALS
# =============================================================================


def _check_t(t: ArrayLike) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + T_TOLERANCE):
        raise DomainError(f"Legendre argument must satisfy |t| <= 1, got max |t| = {np.max(np.abs(t))}")
    return np.clip(t, -1.0, 1.0)


def _recurrence(k: int, d: int, t: np.ndarray) -> np.ndarray:
    # P_{j+1} = ((2j+d-2) t P_j - j P_{j-1}) / (j+d-2)
    previous = np.ones_like(t)
    if k == 0:
        return previous
    current = t.copy()
    for j in range(1, k):
        previous, current = current, ((2 * j + d - 2) * t * current - j * previous) / (j + d - 2)
    return current


def legendre_eval(idx: LegendreIndex, t: ArrayLike) -> ArrayLike:
    """
    Evaluate P_{k,d}(t) by the three-term Gegenbauer recurrence.

    Args:
        idx: Degree and dimension
        t: Scalar or array with |t| <= 1

    Returns:
        P_{k,d}(t), a float for scalar input
    """
    scalar = np.ndim(t) == 0
    values = _recurrence(idx.k, idx.d, _check_t(t))
    return float(values) if scalar else values


def log_derivative_prefactor(idx: LegendreIndex, j: int) -> float:
    """log of k!(k+j+d-3)! Gamma((d-1)/2) / (2^j (k-j)! (k+d-3)! Gamma(j+(d-1)/2))."""
    k, d = idx.k, idx.d
    return (
        gammaln(k + 1)
        + gammaln(k + j + d - 2)
        + gammaln((d - 1) / 2.0)
        - j * math.log(2.0)
        - gammaln(k - j + 1)
        - gammaln(k + d - 2)
        - gammaln(j + (d - 1) / 2.0)
    )


def legendre_derivative(idx: LegendreIndex, t: ArrayLike, j: int = 1) -> ArrayLike:
    """
    j-th derivative of P_{k,d}, via P^{(j)}_{k,d} = c(k,d,j) P_{k-j,d+2j}.

    Returns exact zeros when k < j.
    """
    if j < 0:
        raise DomainError(f"Derivative order must be non-negative, got {j}")
    t_checked = _check_t(t)
    scalar = np.ndim(t) == 0
    if j == 0:
        return legendre_eval(idx, t)
    if idx.k < j:
        return 0.0 if scalar else np.zeros_like(t_checked)
    prefactor = math.exp(log_derivative_prefactor(idx, j))
    values = prefactor * _recurrence(idx.k - j, idx.d + 2 * j, t_checked)
    return float(values) if scalar else values


def legendre_coefficients(idx: LegendreIndex) -> Polynomial:
    """Monomial form of P_{k,d}, built with the same recurrence."""
    t = Polynomial([0.0, 1.0])
    previous = Polynomial([1.0])
    if idx.k == 0:
        return previous
    current = t
    for j in range(1, idx.k):
        previous, current = current, ((2 * j + idx.d - 2) * t * current - j * previous) / (j + idx.d - 2)
    return current


def legendre_zeros(idx: LegendreIndex) -> np.ndarray:
    """Zeros of P_{k,d}: the Gauss-Jacobi nodes with both exponents (d-3)/2."""
    if idx.k == 0:
        return np.empty(0)
    if idx.k == 1:
        return np.zeros(1)
    zeros, _ = roots_jacobi(idx.k, idx.beta, idx.beta)
    return np.sort(zeros)


# =============================================================================
# DIMENSION COUNTS AND SURFACE RATIOS
# =============================================================================


def harmonic_dimension(idx: LegendreIndex) -> int:
    """
    N_{k,d} = (2k+d-2)(k+d-3)! / (k!(d-2)!), exactly.

    Computed as C(k+d-1, k) - C(k+d-3, k-2), the dimension of degree-k
    homogeneous polynomials minus that of degree k-2.
    """
    k, d = idx.k, idx.d
    total = math.comb(k + d - 1, k)
    if k >= 2:
        total -= math.comb(k + d - 3, k - 2)
    return total


def log_harmonic_dimension(idx: LegendreIndex) -> float:
    """log N_{k,d} in log-Gamma space."""
    k, d = idx.k, idx.d
    if k == 0:
        return 0.0
    if d == 2:
        return math.log(2.0)
    return (
        math.log(2 * k + d - 2)
        + gammaln(k + d - 2)
        - gammaln(k + 1)
        - gammaln(d - 1)
    )


def sphere_surface_ratio(d: int) -> float:
    """|S^{d-2}| / |S^{d-1}| = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2))."""
    if d < 2:
        raise DomainError(f"Dimension must be >= 2, got {d}")
    return math.exp(gammaln(d / 2.0) - 0.5 * math.log(math.pi) - gammaln((d - 1) / 2.0))


# =============================================================================
# LEGENDRE HARMONICS
# =============================================================================


def _as_points(x: np.ndarray, d: int) -> np.ndarray:
    points = np.atleast_2d(np.asarray(x, dtype=float))
    if points.shape[-1] != d:
        raise DomainError(f"Expected points in R^{d}, got trailing dimension {points.shape[-1]}")
    return points


def legendre_harmonic_eval(idx: LegendreIndex, x: np.ndarray) -> ArrayLike:
    """
    L_{k,d}(x) = |x|^k P_{k,d}(<e_d, x>/|x|) for a point or an (n, d) matrix.

    At x = 0 the value is 1 for k = 0 and 0 otherwise.
    """
    single = np.ndim(x) == 1
    points = _as_points(x, idx.d)
    radius = np.linalg.norm(points, axis=1)
    safe = np.where(radius > 0, radius, 1.0)
    t = np.clip(points[:, -1] / safe, -1.0, 1.0)
    values = radius ** idx.k * _recurrence(idx.k, idx.d, t)
    if idx.k == 0:
        values = np.ones_like(radius)
    return float(values[0]) if single else values


def check_unit_norm(theta: np.ndarray, tolerance: float = NORM_TOLERANCE) -> None:
    norms = np.linalg.norm(np.atleast_2d(theta), axis=1)
    deviation = np.max(np.abs(norms - 1.0))
    if deviation > tolerance:
        raise DomainError(f"Points must lie on the unit sphere (max |norm - 1| = {deviation:.3e})")


def legendre_harmonic_grad(idx: LegendreIndex, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Euclidean and Riemannian gradients of L_{k,d} at points of S^{d-1}.

    The Euclidean gradient is
        k(k+d-2)/(d-1) P_{k-1,d+2}(t) (e_d - t theta) + k P_{k,d}(t) theta,
    with t = <e_d, theta>; the Riemannian one drops the radial part k L theta.

    Args:
        idx: Degree and dimension
        theta: Unit vector or (n, d) matrix of unit vectors

    Returns:
        (euclidean_grad, riemannian_grad), same shape as theta
    """
    single = np.ndim(theta) == 1
    points = _as_points(theta, idx.d)
    check_unit_norm(points)
    k, d = idx.k, idx.d

    if k == 0:
        zeros = np.zeros_like(points)
        return (zeros[0], zeros[0]) if single else (zeros, zeros.copy())

    t = np.clip(points[:, -1], -1.0, 1.0)
    coefficient = k * (k + d - 2) / (d - 1) * _recurrence(k - 1, d + 2, t)
    tangent = -t[:, None] * points
    tangent[:, -1] += 1.0
    riemannian = coefficient[:, None] * tangent
    euclidean = riemannian + (k * _recurrence(k, d, t))[:, None] * points

    if single:
        return euclidean[0], riemannian[0]
    return euclidean, riemannian


# =============================================================================
# WEIGHTED QUADRATURE
# =============================================================================


def _interval_integral(f: Callable, beta: float, lo: float, hi: float, order: int) -> float:
    # Fold (1-t)^beta into the rule when hi == 1 and (1+t)^beta when lo == -1;
    # the remaining factors are smooth on [lo, hi].
    half = (hi - lo) / 2.0
    right_singular = hi >= 1.0
    left_singular = lo <= -1.0
    a = beta if right_singular else 0.0
    b = beta if left_singular else 0.0
    s, w = (np.asarray(v) for v in _jacobi_rule(order, a, b))
    t = lo + half * (1.0 + s)

    factor = np.full_like(t, half)
    factor *= half ** (a + b)
    if not right_singular:
        factor *= (1.0 - t) ** beta
    if not left_singular:
        factor *= (1.0 + t) ** beta
    return float(np.dot(w, factor * f(t)))


def weighted_integral(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    rule: QuadratureRule | None = None,
    breakpoints: Sequence[float] = (0.0,),
) -> float:
    """
    Approximate the integral of f(t) (1-t^2)^{(d-3)/2} over [-1, 1].

    The interval is split at `breakpoints` (default: the activation kink at 0)
    and each piece uses a Gauss-Jacobi rule of the given order.

    Args:
        f: Vectorized integrand
        d: Dimension (d >= 2)
        rule: Quadrature rule, default from settings
        breakpoints: Interior points where f may have kinks

    Returns:
        The weighted integral
    """
    if d < 2:
        raise DomainError(f"Dimension must be >= 2, got {d}")
    rule = rule or default_rule()
    beta = (d - 3) / 2.0
    cuts = sorted({float(p) for p in breakpoints if -1.0 < p < 1.0})
    edges = [-1.0] + cuts + [1.0]
    return sum(
        _interval_integral(f, beta, lo, hi, rule.order)
        for lo, hi in zip(edges[:-1], edges[1:])
        if hi > lo
    )


def half_line_integral(
    f: Callable[[np.ndarray], np.ndarray], d: int, rule: QuadratureRule | None = None
) -> float:
    """Integral of f(t) (1-t^2)^{(d-3)/2} over [0, 1] (activations vanish on t < 0)."""
    if d < 2:
        raise DomainError(f"Dimension must be >= 2, got {d}")
    rule = rule or default_rule()
    return _interval_integral(f, (d - 3) / 2.0, 0.0, 1.0, rule.order)


def abs_legendre_integral(idx: LegendreIndex, rule: QuadratureRule | None = None) -> float:
    """Integral of |P_{k,d}| against the weight, split at the zeros of P_{k,d}."""
    zeros = legendre_zeros(idx)
    return weighted_integral(
        lambda t: np.abs(_recurrence(idx.k, idx.d, t)),
        idx.d,
        rule,
        breakpoints=tuple(zeros.tolist()) + (0.0,),
    )


def positive_part_integral(
    idx: LegendreIndex,
    g: Callable[[np.ndarray], np.ndarray] | None = None,
    rule: QuadratureRule | None = None,
) -> float:
    """Integral of (P_{k,d})_+ g against the weight (g defaults to 1)."""
    zeros = legendre_zeros(idx)

    def integrand(t: np.ndarray) -> np.ndarray:
        p = _recurrence(idx.k, idx.d, t)
        weight = g(t) if g is not None else 1.0
        return np.maximum(p, 0.0) * weight

    return weighted_integral(integrand, idx.d, rule, breakpoints=tuple(zeros.tolist()) + (0.0,))


def normalization_gamma(idx: LegendreIndex, rule: QuadratureRule | None = None) -> float:
    """
    gamma_{k,d} = 2 / (|S^{d-2}|/|S^{d-1}| * integral of |P_{k,d}| (1-t^2)^{(d-3)/2}).

    Raises:
        DegenerateIntegralError: If the integral underflows.
    """
    if idx.k < 1:
        raise DomainError(f"normalization_gamma needs k >= 1, got {idx.k}")
    mass = sphere_surface_ratio(idx.d) * abs_legendre_integral(idx, rule)
    if not np.isfinite(mass) or mass <= np.finfo(float).tiny:
        raise DegenerateIntegralError(f"Integral of |P_{{{idx.k},{idx.d}}}| underflowed ({mass})")
    return 2.0 / mass


# =============================================================================
# FUNK-HECKE COEFFICIENTS
# =============================================================================


def _half_line_moment(idx: LegendreIndex, alpha: int) -> float:
    # Integral over [0, 1] of P_{k,d}(t) t^alpha (1-t^2)^beta, term by term:
    # int_0^1 t^m (1-t^2)^beta dt = B((m+1)/2, beta+1) / 2.
    coefficients = legendre_coefficients(idx).coef
    total = 0.0
    for power, c in enumerate(coefficients):
        if c != 0.0:
            total += c * 0.5 * math.exp(betaln((power + alpha + 1) / 2.0, idx.beta + 1.0))
    return total


def lambda_coefficient(idx: LegendreIndex, alpha: int) -> float:
    """
    lambda^{(alpha)}_{k,d} = |S^{d-2}|/|S^{d-1}| * int P_{k,d}(t) (t)_+^alpha (1-t^2)^{(d-3)/2} dt.

    Exactly 0 when k = alpha (mod 2) and k > alpha; the Gamma closed form
    with sign (-1)^{(k-1-alpha)/2} when k >= alpha + 1; an exact monomial
    moment sum when k <= alpha.
    """
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    k, d = idx.k, idx.d
    ratio = sphere_surface_ratio(d)

    if k > alpha and (k - alpha) % 2 == 0:
        return 0.0

    if k >= alpha + 1:
        log_magnitude = (
            math.log(ratio)
            + gammaln(alpha + 1)
            - k * math.log(2.0)
            + gammaln((d - 1) / 2.0)
            + gammaln(k - alpha)
            - gammaln((k - alpha + 1) / 2.0)
            - gammaln((k + d + alpha) / 2.0)
        )
        sign = -1.0 if ((k - 1 - alpha) // 2) % 2 else 1.0
        return sign * math.exp(log_magnitude)

    return ratio * _half_line_moment(idx, alpha)


def lambda_coefficient_quadrature(
    idx: LegendreIndex, alpha: int, rule: QuadratureRule | None = None
) -> float:
    """lambda^{(alpha)}_{k,d} straight from its defining integral."""
    act = ActivationSpec.relu(alpha)
    integral = weighted_integral(
        lambda t: _recurrence(idx.k, idx.d, t) * act(t), idx.d, rule
    )
    return sphere_surface_ratio(idx.d) * integral
