"""Median and Wilcoxon two-sample tests and their kernel-smoothed versions."""

from .distributions import DistributionModel, get_model, hypergeom_pmf, sample_median_cdf
from .efficiency import are, are_t_family_curve, pitman_efficacy, theoretical_local_power
from .exceptions import ConfigurationError, DegenerateSampleError, QuadratureError
from .kernels import KernelSpec, get_kernel, kernel_names, verify_kernel
from .rank_tests import (
    TestResult,
    TwoSample,
    median_exact_pvalue,
    two_sample_t,
    wilcoxon_exact_pvalue,
    wilcoxon_test,
)
from .simulation import (
    ExperimentConfig,
    run_bootstrap_power,
    run_power_experiment,
    run_power_ratio,
    run_pvalue_comparison,
)
from .smoothed import (
    BandwidthRule,
    SmoothedConfig,
    smoothed_median,
    smoothed_median_test,
    smoothed_wilcoxon,
    smoothed_wilcoxon_test,
)

__version__ = "0.1.0"
