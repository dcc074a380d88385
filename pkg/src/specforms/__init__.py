"""Higher-order trace derivatives of Schatten norms via operator integrals.

The package computes Taylor coefficients of t -> ||H + tV||_p^p for
Hermitian matrices, built from three layers: scalar function models and
divided differences, multiple operator integrals on eigenvalue grids,
and seeded experiment drivers with reproducible reports.
"""

from .divided import (
    DividedDifference,
    divided_difference,
    divided_difference_via_momentum,
    tilde_divided_difference,
)
from .errors import (
    EigenSolverError,
    QuadratureError,
    UnsupportedConfigError,
    ValidationError,
)
from .experiments import (
    DEFAULT_N_GRID,
    DEFAULT_T_GRID,
    DEFAULT_TOLERANCES,
    MODES,
    CheckSet,
    ExperimentConfig,
    RunReport,
    run,
    run_derivative,
    run_holder_scan,
    run_moi_convergence,
    run_perturbation_check,
    run_selftest,
    run_taylor_scan,
    thread_count,
)
from .forms import (
    MAX_FORM_ORDER,
    FrechetForm,
    TaylorReport,
    delta_bracket,
    delta_symmetric,
    embedded_delta,
    fd_oracle,
    holder_difference_norms,
    model_delta_bracket,
    model_delta_symmetric,
    selfadjoint_embed,
    taylor_expand,
    taylor_integral_form,
    trace_identity_residual,
)
from .functions import (
    CallableKernel,
    Monomial,
    Polynomial,
    PowerAbs,
    PowerKernel,
    ScalarFunctionModel,
    as_kernel,
    kernel_from_dict,
    kernel_to_dict,
)
from .instances import PROFILES, SplitMix64, generate_instance
from .moi import (
    MoiRequest,
    SeparableSymbol,
    algebraic_shift,
    binned_eigenvalues,
    moi_binned,
    moi_exact,
    moi_separable,
    perturbation_identity,
)
from .momenta import MomentumSpec, momentum_eval, momentum_perturbation_pair
from .simplex import SimplexQuadratureRule, build_quadrature
from .spectral import (
    HermitianMatrix,
    SchattenExponent,
    SpectralDecomposition,
    apply_scalar_function,
    eigendecompose,
    schatten_norm,
    schatten_power_trace,
    singular_values,
    truncated_norm,
)
from .util import canonical_json, fit_loglog_slope, frobenius, operator_norm, real_trace

__all__ = [
    "CallableKernel",
    "CheckSet",
    "DEFAULT_N_GRID",
    "DEFAULT_T_GRID",
    "DEFAULT_TOLERANCES",
    "DividedDifference",
    "EigenSolverError",
    "ExperimentConfig",
    "FrechetForm",
    "HermitianMatrix",
    "MAX_FORM_ORDER",
    "MODES",
    "MoiRequest",
    "Monomial",
    "MomentumSpec",
    "PROFILES",
    "Polynomial",
    "PowerAbs",
    "PowerKernel",
    "QuadratureError",
    "RunReport",
    "ScalarFunctionModel",
    "SchattenExponent",
    "SeparableSymbol",
    "SimplexQuadratureRule",
    "SpectralDecomposition",
    "SplitMix64",
    "TaylorReport",
    "UnsupportedConfigError",
    "ValidationError",
    "algebraic_shift",
    "apply_scalar_function",
    "as_kernel",
    "binned_eigenvalues",
    "build_quadrature",
    "canonical_json",
    "delta_bracket",
    "delta_symmetric",
    "divided_difference",
    "divided_difference_via_momentum",
    "eigendecompose",
    "embedded_delta",
    "fd_oracle",
    "fit_loglog_slope",
    "frobenius",
    "generate_instance",
    "holder_difference_norms",
    "kernel_from_dict",
    "kernel_to_dict",
    "model_delta_bracket",
    "model_delta_symmetric",
    "moi_binned",
    "moi_exact",
    "moi_separable",
    "momentum_eval",
    "momentum_perturbation_pair",
    "operator_norm",
    "perturbation_identity",
    "real_trace",
    "run",
    "run_derivative",
    "run_holder_scan",
    "run_moi_convergence",
    "run_perturbation_check",
    "run_selftest",
    "run_taylor_scan",
    "schatten_norm",
    "schatten_power_trace",
    "selfadjoint_embed",
    "singular_values",
    "taylor_expand",
    "taylor_integral_form",
    "thread_count",
    "tilde_divided_difference",
    "truncated_norm",
    "trace_identity_residual",
]

__version__ = "0.1.0"
