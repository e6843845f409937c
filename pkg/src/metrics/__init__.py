# Metrics module: IPM, Stein and Wasserstein estimators plus analytic oracles
from .base import (
    DimensionMismatchError,
    DirectionResult,
    IpmEstimate,
    IpmVariant,
    SampleDomainError,
    SteinEstimate,
    SteinVariant,
    UnsupportedKernelError,
)
from .ipm import (
    ipm_f1_known_direction,
    ipm_f1_known_direction_with_error,
    ipm_f1_optimize,
    ipm_f2_features,
    ipm_f2_features_with_error,
    ipm_f2_tilde,
    ipm_f2_tilde_with_error,
    sample_tilde_features,
)
from .kernels import arccos_kernel_uniform, ipm_f2_kernel, kernel_check, mmd_squared
from .oracles import theoretical_f1_ipm, theoretical_f1_ipm_mc, theoretical_f2_ipm, theoretical_ratio
from .stein import (
    sd_f1_brute_force,
    sd_f1_lower_bound,
    sd_f2_features,
    sd_f2_features_with_error,
    sd_f2_upper_bound,
    sd_log_ratio_asymptotic,
    sd_ratio_lower_bound,
)
from .wasserstein import (
    GridOptimize,
    KnownAxis,
    max_sliced_w1,
    sliced_w1,
    sliced_w1_with_error,
    wasserstein_1d,
)
