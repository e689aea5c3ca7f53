"""Weighted generalized fractional derivatives and integrals.

Left and right operators with Mittag-Leffler kernels, numerical checks of
their inversion and integration-by-parts identities, and a solver for the
associated fractional variational problem.
"""

from .core import FracParams, Grid, Normalization, SampledFunction, WeightFunction, make_params, sample
from .errors import (
    BoundaryMismatch,
    ConfigError,
    DomainError,
    EvalError,
    GridMismatch,
    MultipleVariablesError,
    NonConvergence,
    ParseError,
    SingularSystem,
    UnsupportedError,
)
from .mlf import MLEvalOptions, mittag_leffler, ml_kernel
from .operators import (
    OperatorKind,
    OperatorMatrix,
    SeriesReport,
    SignConvention,
    apply,
    gen_derivative_direct_oracle,
    gen_derivative_left,
    gen_derivative_right,
    gen_integral_left,
    gen_integral_right,
    reflect,
    rl_integral_left,
    rl_integral_right,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryMismatch", "ConfigError", "DomainError", "EvalError", "FracParams", "Grid",
    "GridMismatch", "MLEvalOptions", "MultipleVariablesError", "NonConvergence", "Normalization",
    "OperatorKind", "OperatorMatrix", "ParseError", "SampledFunction", "SeriesReport",
    "SignConvention", "SingularSystem", "UnsupportedError", "WeightFunction", "apply",
    "gen_derivative_direct_oracle", "gen_derivative_left", "gen_derivative_right",
    "gen_integral_left", "gen_integral_right", "make_params", "mittag_leffler", "ml_kernel",
    "reflect", "rl_integral_left", "rl_integral_right", "sample",
]
