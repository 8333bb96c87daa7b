"""Discrete verification of weighted Nash inequalities and fractional heat-kernel bounds
for Kolmogorov operators ``A = -Laplacian - grad log rho . grad`` on truncated 1D grids."""

from .bounds import (BoundReport, RateFunctions, bound_ratio, bound_ratio_alpha_ge1, c_alpha_estimate,
                     fit_exponent, rate_K, rate_U, schrodinger_kernel)
from .config import RunConfig, parse_config
from .discretization import (DiscreteOperator, Grid1D, assemble_divergence_form, assemble_schrodinger,
                             build_grid, weighted_inner)
from .errors import ConfigError, NumericalDiagnostic
from .fractional import (QuadratureRule, SubordinationMeasure, balakrishnan_apply, balakrishnan_rule,
                         balakrishnan_scalar, subordinate_semigroup, subordination_measure)
from .models import DensityModel, ModelPointReport
from .nash import (GammaCertificate, NashRate, alpha_ge1_gap, fractional_nash_gap, gamma_certificate,
                   jensen_check, lemma_2_8_scalar, nash_gap)
from .spectral import (KernelMatrix, SpectralDecomposition, apply_function, eigendecompose, kernel,
                       matrix_exponential_oracle, quadratic_form)
from .suite import VerificationReport, run_all, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "ConfigError", "DensityModel", "DiscreteOperator", "GammaCertificate", "Grid1D",
    "KernelMatrix", "ModelPointReport", "NashRate", "NumericalDiagnostic", "QuadratureRule",
    "RateFunctions", "RunConfig", "SpectralDecomposition", "SubordinationMeasure", "VerificationReport",
    "alpha_ge1_gap", "apply_function", "assemble_divergence_form", "assemble_schrodinger",
    "balakrishnan_apply", "balakrishnan_rule", "balakrishnan_scalar", "bound_ratio",
    "bound_ratio_alpha_ge1", "build_grid", "c_alpha_estimate", "eigendecompose", "fit_exponent",
    "fractional_nash_gap", "gamma_certificate", "jensen_check", "kernel", "lemma_2_8_scalar",
    "matrix_exponential_oracle", "nash_gap", "parse_config", "quadratic_form", "rate_K", "rate_U",
    "run_all", "run_scenario", "schrodinger_kernel", "subordinate_semigroup", "subordination_measure",
    "weighted_inner",
]
