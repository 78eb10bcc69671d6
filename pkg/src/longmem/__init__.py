"""Functional linear processes with space-varying long memory.

The package simulates sequences of random functions built by filtering
spatially correlated innovations through power-law moving-average weights
whose exponent varies over the index space, computes their exact and
asymptotic covariance structure, and verifies the central limit theorem
for the suitably renormalized partial sums by deterministic identities
and Monte Carlo experiments.
"""

from .model import (
    InnovationModel,
    MemoryFunction,
    ProcessSpec,
    SpaceGrid,
    TailBudgetError,
    ValidationError,
    ValidationReport,
    load_spec,
    spec_from_dict,
    truncation_length,
    validate,
)
from .analytics import (
    CertifiedValue,
    CoefficientTable,
    LimitKernel,
    NormalizationPlan,
    RegimeError,
    classify_summability,
    cross_covariance_asymptotic,
    cross_covariance_exact,
    dominating_bound,
    l2_membership,
    limit_kernel,
    normalization_plan,
    partial_sum_covariance_asymptotic,
    partial_sum_covariance_exact,
    partial_sum_covariance_series,
    partial_sum_weights,
    scale_integral,
    scale_integral_closed_form,
    scale_integral_upper_bound,
)
from .simulate import (
    PathEnsemble,
    generate_paths,
    innovation_block,
    normalize_partial_sums,
    partial_sums_direct,
    partial_sums_via_z,
    sample_innovations,
)
from .mcverify import (
    CovarianceReport,
    ExponentFit,
    NormalityReport,
    fit_variance_exponent,
    normality_diagnostics,
    run_clt_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "CertifiedValue",
    "CoefficientTable",
    "CovarianceReport",
    "ExponentFit",
    "InnovationModel",
    "LimitKernel",
    "MemoryFunction",
    "NormalityReport",
    "NormalizationPlan",
    "PathEnsemble",
    "ProcessSpec",
    "RegimeError",
    "SpaceGrid",
    "TailBudgetError",
    "ValidationError",
    "ValidationReport",
    "classify_summability",
    "cross_covariance_asymptotic",
    "cross_covariance_exact",
    "dominating_bound",
    "fit_variance_exponent",
    "generate_paths",
    "innovation_block",
    "l2_membership",
    "limit_kernel",
    "load_spec",
    "normality_diagnostics",
    "normalization_plan",
    "normalize_partial_sums",
    "partial_sum_covariance_asymptotic",
    "partial_sum_covariance_exact",
    "partial_sum_covariance_series",
    "partial_sum_weights",
    "partial_sums_direct",
    "partial_sums_via_z",
    "run_clt_experiment",
    "sample_innovations",
    "scale_integral",
    "scale_integral_closed_form",
    "scale_integral_upper_bound",
    "spec_from_dict",
    "truncation_length",
    "validate",
    "__version__",
]
