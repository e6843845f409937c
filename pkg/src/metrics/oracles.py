"""
Closed-form and quadrature values for the signed-Legendre pair, used as the
theory columns of the experiments and as test oracles.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from ..harmonics import (
    ActivationSpec,
    DegenerateIntegralError,
    DomainError,
    LegendreIndex,
    QuadratureRule,
    abs_legendre_integral,
    legendre_eval,
    legendre_zeros,
    log_harmonic_dimension,
    weighted_integral,
)
from ..measures import LegendrePairSpec, RngSeed, sample_legendre_t_marginal

logger = logging.getLogger(__name__)


def theoretical_f1_ipm(
    idx: LegendreIndex, act: ActivationSpec, rule: Optional[QuadratureRule] = None
) -> float:
    """
    F1 IPM between mu_d and nu_d:

        2 |int P_{k,d}(t) sigma(t) (1-t^2)^{(d-3)/2} dt| / int |P_{k,d}(t)| (1-t^2)^{(d-3)/2} dt

    Raises:
        DegenerateIntegralError: If the denominator underflows.
    """
    if idx.k < 1:
        raise DomainError(f"theoretical_f1_ipm needs k >= 1, got {idx.k}")
    denominator = abs_legendre_integral(idx, rule)
    if not np.isfinite(denominator) or denominator <= np.finfo(float).tiny:
        raise DegenerateIntegralError(f"Integral of |P_{{{idx.k},{idx.d}}}| underflowed ({denominator})")
    breakpoints = tuple(legendre_zeros(idx).tolist()) + (0.0,)
    numerator = weighted_integral(
        lambda t: legendre_eval(idx, t) * act(t), idx.d, rule, breakpoints=breakpoints
    )
    return 2.0 * abs(numerator) / denominator


def theoretical_ratio(idx: LegendreIndex) -> float:
    """F1 / F2 separation ratio sqrt(N_{k,d}), through log N for large arguments."""
    return math.exp(0.5 * log_harmonic_dimension(idx))


def theoretical_f2_ipm(
    idx: LegendreIndex, act: ActivationSpec, rule: Optional[QuadratureRule] = None
) -> float:
    """F2 IPM between mu_d and nu_d: theoretical_f1_ipm / sqrt(N_{k,d})."""
    return theoretical_f1_ipm(idx, act, rule) / theoretical_ratio(idx)


def theoretical_f1_ipm_mc(
    spec: LegendrePairSpec, act: ActivationSpec, n: int, seed: RngSeed
) -> Tuple[float, float]:
    """
    Monte Carlo F1 IPM: 2 |E[sigma(t) sign P_{k,d}(t)]| with t drawn from the
    density proportional to |P_{k,d}(t)| (1-t^2)^{(d-3)/2}.

    Returns:
        (value, standard_error)
    """
    t = sample_legendre_t_marginal(spec, n, seed)
    values = 2.0 * act(t) * np.sign(legendre_eval(spec.idx, t))
    standard_error = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return abs(float(values.mean())), standard_error
