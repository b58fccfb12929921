"""Numerical symbol calculus, oscillatory integrals, and deformed
products under polynomially bounded R^n-actions."""

from .exprdsl import ExprParseError, ParseDiagnostic, VarLayout, parse, pretty, try_parse
from .jets import Jet, extract_partial, jet_apply_unary, jet_mul, jet_var
from .oscint import (
    IntegralResult,
    NonConvergenceError,
    Pairing,
    QuadraturePlan,
    cutoff_limit_integral,
    oscillatory_integral,
    select_s,
    verify_identities,
)
from .symbols import (
    GridSpec,
    OrderProfile,
    SeminormSystem,
    SymbolFn,
    check_symbol,
    differentiate,
    expr_symbol,
    pointwise_product,
    seminorm_estimate,
)
from .actions import ActionSpec, CompactTau, act, tau1, tau_n, tau_partials
from .deform import (
    CovariantBilinear,
    DeformationParams,
    deform_bilinear,
    local_nc_product,
    moyal_product,
    property_suite,
    twisted_convolution,
)

__version__ = "0.1.0"
