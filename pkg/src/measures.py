"""
Samplers, densities and scores for the distribution families on the sphere.

- uniform measure on S^{d-1}
- the signed-Legendre pair mu_d / nu_d (densities proportional to (L_{k,d})_+
  and (-L_{k,d})_+)
- the Gibbs measure with density proportional to exp(gamma L_{k,d})
- standard vs. one-axis-shrunk Gaussians in R^d

Sphere samplers factor a point as x = t e_d + sqrt(1-t^2) xi with xi uniform
on S^{d-2}. Under the uniform measure t has density proportional to
(1-t^2)^{(d-3)/2}, i.e. t = 2B - 1 with B ~ Beta((d-1)/2, (d-1)/2), so every
target here only needs a one-dimensional rejection step on t whose acceptance
rate does not depend on d.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, TextIO, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .config import get_settings
from .harmonics import (
    DomainError,
    LegendreIndex,
    QuadratureRule,
    check_unit_norm,
    legendre_eval,
    legendre_harmonic_eval,
    legendre_harmonic_grad,
    normalization_gamma,
    sphere_surface_ratio,
    weighted_integral,
)

logger = logging.getLogger(__name__)

RngSeed = int

MAX_SEED = 2**64


class RejectionCapExceeded(RuntimeError):
    """Rejection sampler used more proposals than allowed."""
    pass


# =============================================================================
# SEEDS
# =============================================================================


def _check_seed(seed: RngSeed) -> int:
    if int(seed) != seed or not 0 <= seed < MAX_SEED:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    return int(seed)


def rng_for(seed: RngSeed, *key: int) -> np.random.Generator:
    """Generator for a seed and a derivation path (worker index, stream id, ...)."""
    sequence = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(sequence)


def derive_seed(seed: RngSeed, *key: int) -> int:
    """Child seed for a derivation path; the splitting function behind every parallel loop."""
    sequence = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def split_counts(n: int, workers: int) -> List[int]:
    """Split n into `workers` near-equal chunk sizes (first chunks get the remainder)."""
    workers = max(1, min(int(workers), n))
    base, extra = divmod(n, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _parallel_chunks(
    draw: Callable[[int, int], np.ndarray],
    n: int,
    workers: int,
) -> np.ndarray:
    # draw(chunk_index, chunk_size); results are concatenated in chunk order
    counts = split_counts(n, workers)
    if len(counts) == 1:
        return draw(0, counts[0])
    with ThreadPoolExecutor(max_workers=len(counts)) as pool:
        parts = list(pool.map(draw, range(len(counts)), counts))
    return np.concatenate(parts, axis=0)


# =============================================================================
# DOMAIN TYPES
# =============================================================================


class Domain(str, Enum):
    """Where the rows of a SampleSet live."""
    SPHERE = "sphere"          # S^{d-1}
    BALL_LIFT = "ball_lift"    # unit ball of R^d x {1}
    BIAS_LIFT = "bias_lift"    # R^d x {1}, unbounded
    EUCLIDEAN = "euclidean"    # R^d


@dataclass(frozen=True)
class SampleSet:
    """n points stored as an (n, columns) matrix plus their domain tag."""
    points: np.ndarray
    domain: Domain = Domain.SPHERE
    seed: Optional[RngSeed] = None

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", points)
        if self.domain == Domain.SPHERE:
            check_unit_norm(points, tolerance=1e-10)
        elif self.domain in (Domain.BALL_LIFT, Domain.BIAS_LIFT):
            if not np.all(points[:, -1] == 1.0):
                raise DomainError("Lifted samples must have last coordinate exactly 1")
            if self.domain == Domain.BALL_LIFT:
                norms = np.linalg.norm(points[:, :-1], axis=1)
                if np.any(norms > 1.0 + 1e-10):
                    raise DomainError(f"Ball-lift samples must have |x| <= 1 (max {norms.max():.6f})")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        """Number of columns (d, or d+1 for lifted sets)."""
        return self.points.shape[1]

    @property
    def is_lifted(self) -> bool:
        return self.domain in (Domain.BALL_LIFT, Domain.BIAS_LIFT)

    @property
    def base_points(self) -> np.ndarray:
        """Points without the bias coordinate."""
        return self.points[:, :-1] if self.is_lifted else self.points


@dataclass(frozen=True)
class LegendrePairSpec:
    """Parameters of the mu_d / nu_d pair with densities gamma (+-L_{k,d})_+ / |S^{d-1}|."""
    k: int
    d: int
    gamma: float

    def __post_init__(self) -> None:
        LegendreIndex(self.k, self.d)
        if self.k < 1:
            raise DomainError(f"Legendre pair needs k >= 1, got {self.k}")
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def normalized(cls, k: int, d: int, rule: QuadratureRule | None = None) -> "LegendrePairSpec":
        """Spec whose gamma makes both measures probability measures."""
        return cls(k=k, d=d, gamma=normalization_gamma(LegendreIndex(k, d), rule))

    @property
    def idx(self) -> LegendreIndex:
        return LegendreIndex(self.k, self.d)


@dataclass(frozen=True)
class GibbsSpec:
    """Parameters of nu_d with density proportional to exp(gamma L_{k,d})."""
    k: int
    d: int
    gamma: float = 1.0

    def __post_init__(self) -> None:
        LegendreIndex(self.k, self.d)
        if self.k < 1:
            raise DomainError(f"Gibbs measure needs k >= 1, got {self.k}")
        if abs(self.gamma) > 1.0:
            raise DomainError(f"gamma must lie in [-1, 1], got {self.gamma}")

    @property
    def idx(self) -> LegendreIndex:
        return LegendreIndex(self.k, self.d)


@dataclass(frozen=True)
class GaussianSpec:
    """Standard Gaussian vs. a Gaussian with one shrunk axis."""
    d: int
    shrunk_variance: float = 0.1
    shrunk_axis: Optional[Tuple[float, ...]] = field(default=None)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise DomainError(f"Gaussian dimension must be >= 1, got {self.d}")
        if not self.shrunk_variance > 0:
            raise DomainError(f"shrunk_variance must be positive, got {self.shrunk_variance}")
        if self.shrunk_axis is not None:
            axis = np.asarray(self.shrunk_axis, dtype=float)
            if axis.shape != (self.d,) or abs(np.linalg.norm(axis) - 1.0) > 1e-10:
                raise DomainError("shrunk_axis must be a unit vector in R^d")

    @property
    def axis(self) -> np.ndarray:
        if self.shrunk_axis is None:
            axis = np.zeros(self.d)
            axis[-1] = 1.0
            return axis
        return np.asarray(self.shrunk_axis, dtype=float)


# =============================================================================
# UNIFORM SPHERE
# =============================================================================


def _uniform_sphere_rows(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    gaussian = rng.standard_normal((n, d))
    norms = np.linalg.norm(gaussian, axis=1, keepdims=True)
    # a zero Gaussian vector has probability 0; redraw rather than divide by 0
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        gaussian[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(gaussian, axis=1, keepdims=True)
    return gaussian / norms


def sample_uniform_sphere(d: int, n: int, seed: RngSeed, workers: int = 1) -> SampleSet:
    """
    n i.i.d. uniform points on S^{d-1} (normalized standard Gaussians).

    d = 1 gives the two-point sphere {-1, +1}.
    """
    if d < 1 or n < 1:
        raise DomainError(f"Need d >= 1 and n >= 1, got d={d}, n={n}")
    points = _parallel_chunks(
        lambda i, size: _uniform_sphere_rows(d, size, rng_for(seed, i)), n, workers
    )
    return SampleSet(points=points, domain=Domain.SPHERE, seed=seed)


def _assemble(t: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    # x = t e_d + sqrt(1-t^2) xi, xi uniform on S^{d-2}
    xi = _uniform_sphere_rows(d - 1, t.shape[0], rng)
    radial = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
    return np.column_stack([radial[:, None] * xi, t])


# =============================================================================
# ONE-DIMENSIONAL REJECTION ON THE t-MARGINAL
# =============================================================================


def sample_t_envelope(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """t = <e_d, x> for x uniform on S^{d-1}: 2B - 1 with B ~ Beta((d-1)/2, (d-1)/2)."""
    shape = (d - 1) / 2.0
    return 2.0 * rng.beta(shape, shape, size=n) - 1.0


def rejection_sample_t(
    acceptance: Callable[[np.ndarray], np.ndarray],
    d: int,
    n: int,
    rng: np.random.Generator,
    cap: Optional[int] = None,
    label: str = "target",
) -> np.ndarray:
    """
    Draw n values of t from the density proportional to acceptance(t) (1-t^2)^{(d-3)/2}.

    Args:
        acceptance: Vectorized acceptance probability in [0, 1]
        d: Sphere dimension
        n: Number of accepted draws
        rng: Random generator
        cap: Maximum number of proposals (default from settings)
        label: Name used in log and error messages

    Raises:
        RejectionCapExceeded: If more than `cap` proposals are needed.
    """
    settings = get_settings()
    cap = cap if cap is not None else settings.rejection_cap
    accepted: List[np.ndarray] = []
    have = 0
    proposals = 0
    rate = 1.0

    while have < n:
        remaining = n - have
        batch = int(min(max(settings.rejection_batch, math.ceil(1.2 * remaining / max(rate, 1e-6))), 1 << 22))
        batch = min(batch, cap - proposals)
        if batch <= 0:
            raise RejectionCapExceeded(
                f"Sampler for {label} exceeded {cap} proposals with {have}/{n} accepted "
                f"(acceptance rate {have / max(proposals, 1):.3e})"
            )
        t = sample_t_envelope(d, batch, rng)
        u = rng.random(batch)
        keep = t[u < acceptance(t)]
        proposals += batch
        accepted.append(keep)
        have += keep.shape[0]
        rate = max(have / proposals, 1.0 / proposals)

    logger.debug(f"{label}: {n} samples from {proposals} proposals (rate {n / proposals:.4f})")
    return np.concatenate(accepted)[:n]


# =============================================================================
# LEGENDRE PAIR
# =============================================================================


def sample_legendre_pair(
    spec: LegendrePairSpec,
    n: int,
    seed: RngSeed,
    workers: int = 1,
    cap: Optional[int] = None,
) -> Tuple[SampleSet, SampleSet]:
    """
    n samples from each of mu_d and nu_d.

    t is accepted with probability (P_{k,d}(t))_+ for mu_d and (-P_{k,d}(t))_+
    for nu_d; both are valid envelopes since |P_{k,d}| <= 1.
    """
    idx = spec.idx

    def draw(stream: int, sign: float) -> Callable[[int, int], np.ndarray]:
        def chunk(i: int, size: int) -> np.ndarray:
            rng = rng_for(seed, stream, i)
            t = rejection_sample_t(
                lambda s: np.maximum(sign * legendre_eval(idx, s), 0.0),
                spec.d,
                size,
                rng,
                cap,
                label=f"{'mu' if sign > 0 else 'nu'}_(k={spec.k}, d={spec.d})",
            )
            return _assemble(t, spec.d, rng)
        return chunk

    mu = _parallel_chunks(draw(0, 1.0), n, workers)
    nu = _parallel_chunks(draw(1, -1.0), n, workers)
    return (
        SampleSet(points=mu, domain=Domain.SPHERE, seed=seed),
        SampleSet(points=nu, domain=Domain.SPHERE, seed=seed),
    )


def sample_legendre_t_marginal(
    spec: LegendrePairSpec, n: int, seed: RngSeed, cap: Optional[int] = None
) -> np.ndarray:
    """t with density proportional to |P_{k,d}(t)| (1-t^2)^{(d-3)/2}."""
    idx = spec.idx
    return rejection_sample_t(
        lambda s: np.abs(legendre_eval(idx, s)), spec.d, n, rng_for(seed, 2), cap, label="|P| marginal"
    )


def sphere_area(d: int) -> float:
    """|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)."""
    return math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - gammaln(d / 2.0))


def density_legendre_pair(spec: LegendrePairSpec, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Densities of mu_d and nu_d with respect to the Hausdorff measure on S^{d-1}.

    The boundary L = 0 belongs to nu_d, where both densities vanish anyway.
    """
    check_unit_norm(x)
    values = np.asarray(legendre_harmonic_eval(spec.idx, x))
    scale = spec.gamma / sphere_area(spec.d)
    mu = np.where(values > 0, scale * values, 0.0)
    nu = np.where(values <= 0, -scale * values, 0.0)
    if np.ndim(x) == 1:
        return float(mu), float(nu)
    return mu, nu


# =============================================================================
# GIBBS MEASURE
# =============================================================================


def _gibbs_acceptance(spec: GibbsSpec) -> Callable[[np.ndarray], np.ndarray]:
    idx = spec.idx
    shift = 1.0 if spec.gamma >= 0 else -1.0
    return lambda t: np.exp(spec.gamma * (legendre_eval(idx, t) - shift))


def sample_gibbs(
    spec: GibbsSpec,
    n: int,
    seed: RngSeed,
    workers: int = 1,
    cap: Optional[int] = None,
) -> SampleSet:
    """
    n samples from the density proportional to exp(gamma L_{k,d}).

    Acceptance exp(gamma (P - 1)) for gamma >= 0 and exp(gamma (P + 1)) for
    gamma < 0, both bounded by 1 and below by exp(-2) when |gamma| <= 1.
    """
    acceptance = _gibbs_acceptance(spec)

    def chunk(i: int, size: int) -> np.ndarray:
        rng = rng_for(seed, 3, i)
        t = rejection_sample_t(acceptance, spec.d, size, rng, cap, label=f"gibbs_(k={spec.k}, d={spec.d})")
        return _assemble(t, spec.d, rng)

    return SampleSet(points=_parallel_chunks(chunk, n, workers), domain=Domain.SPHERE, seed=seed)


def gibbs_normalizer(spec: GibbsSpec, rule: QuadratureRule | None = None) -> float:
    """Integral of exp(gamma L_{k,d}) against the uniform probability measure."""
    idx = spec.idx
    integral = weighted_integral(
        lambda t: np.exp(spec.gamma * legendre_eval(idx, t)), spec.d, rule, breakpoints=()
    )
    return sphere_surface_ratio(spec.d) * integral


def density_gibbs(spec: GibbsSpec, x: np.ndarray, rule: QuadratureRule | None = None) -> np.ndarray:
    """Density of the Gibbs measure with respect to the Hausdorff measure."""
    check_unit_norm(x)
    values = np.asarray(legendre_harmonic_eval(spec.idx, x))
    return np.exp(spec.gamma * values) / (sphere_area(spec.d) * gibbs_normalizer(spec, rule))


def score_gibbs(spec: GibbsSpec, x: np.ndarray) -> np.ndarray:
    """s_nu(x) = gamma * Riemannian gradient of L_{k,d} at x (tangent to the sphere)."""
    _, riemannian = legendre_harmonic_grad(spec.idx, x)
    return spec.gamma * riemannian


# =============================================================================
# GAUSSIANS AND LIFTS
# =============================================================================


def sample_gaussian_pair(spec: GaussianSpec, n: int, seed: RngSeed) -> Tuple[SampleSet, SampleSet]:
    """
    n samples of N(0, I_d) and of the Gaussian whose variance along `axis` is shrunk_variance.

    Points stay in R^d; use lift_to_ball for the bias-lifted domains.
    """
    if n < 1:
        raise DomainError(f"Need n >= 1, got {n}")
    standard = rng_for(seed, 4).standard_normal((n, spec.d))
    z = rng_for(seed, 5).standard_normal((n, spec.d))
    axis = spec.axis
    shrunk = z + (math.sqrt(spec.shrunk_variance) - 1.0) * np.outer(z @ axis, axis)
    return (
        SampleSet(points=standard, domain=Domain.EUCLIDEAN, seed=seed),
        SampleSet(points=shrunk, domain=Domain.EUCLIDEAN, seed=seed),
    )


def lift_to_ball(samples: SampleSet, clip_radius: Optional[float] = None) -> SampleSet:
    """
    Append the bias coordinate 1.

    With clip_radius R, rows are first mapped to x / max(1, |x| / R): points
    inside the radius-R ball are unchanged, points outside are pulled onto
    its boundary. For R <= 1 the result lies in the unit ball and is tagged
    BALL_LIFT; larger radii give a bounded BIAS_LIFT set. Without a radius
    the rows are kept as they are (BIAS_LIFT).
    """
    if samples.is_lifted:
        raise DomainError("Samples are already lifted")
    points = samples.points
    domain = Domain.BIAS_LIFT
    if clip_radius is not None:
        if not clip_radius > 0:
            raise DomainError(f"clip radius must be positive, got {clip_radius}")
        norms = np.linalg.norm(points, axis=1)
        points = points / np.maximum(1.0, norms / clip_radius)[:, None]
        if clip_radius <= 1.0:
            domain = Domain.BALL_LIFT
    lifted = np.column_stack([points, np.ones(points.shape[0])])
    return SampleSet(points=lifted, domain=domain, seed=samples.seed)


def sample_unit_ball(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in the unit ball of R^d."""
    directions = _uniform_sphere_rows(d, n, rng)
    radii = rng.random(n) ** (1.0 / d)
    return directions * radii[:, None]


def sample_discrete_ball_pair(d: int, n_atoms: int, seed: RngSeed) -> Tuple[SampleSet, SampleSet]:
    """Two empirical measures with n_atoms uniform atoms each in the unit ball lift."""
    first = sample_unit_ball(d, n_atoms, rng_for(seed, 6))
    second = sample_unit_ball(d, n_atoms, rng_for(seed, 7))
    ones = np.ones((n_atoms, 1))
    return (
        SampleSet(points=np.hstack([first, ones]), domain=Domain.BALL_LIFT, seed=seed),
        SampleSet(points=np.hstack([second, ones]), domain=Domain.BALL_LIFT, seed=seed),
    )


# =============================================================================
# EXPORT
# =============================================================================


def write_samples_csv(samples: SampleSet, out: Union[str, TextIO], header: bool = False) -> None:
    """One point per row, '.' decimal, 17 significant digits; optional x0..x{m-1} header."""
    names = ",".join(f"x{i}" for i in range(samples.dim)) if header else ""
    np.savetxt(out, samples.points, delimiter=",", fmt="%.17g", header=names, comments="")
