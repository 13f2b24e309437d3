"""Numerical multimetric Finsler geometry.

A family of Riemannian metrics on a shared coordinate patch defines the norm
F = sum_mu sqrt(y' a_mu(x) y).  This package evaluates and cross-verifies the
geometry built on it: fundamental and Cartan tensors, spray and nonlinear /
Chern connections, the 2D invariants, closed-form Holmes-Thompson and
Busemann-Hausdorff measures, and geodesics.
"""

from .config import ConfigError, SamplingPolicy, SpaceConfig, load_config
from .connection import (
    ConnectionState,
    chern_connection,
    connection_state,
    landsberg_berwald,
    nonlinear_connection,
    spray,
    variational_spray,
)
from .dim2 import (
    Frame2D,
    cartan_structure_residuals,
    frame2d,
    invariant_I,
    invariants_JK,
)
from .expr import (
    EvalDomainError,
    ExprError,
    ParseError,
    ScalarExpr,
    UnknownIdentifierError,
    differentiate,
    evaluate,
    parse_expression,
)
from .finsler import (
    ConvexityError,
    FinslerState,
    MultiMetricSpace,
    SlitViolationError,
    TangentSample,
    cartan_tensor,
    convexity_check,
    finsler_norm,
    finsler_state,
    fundamental_tensor,
    riemannian_detect,
)
from .geodesic import GeodesicPath, action_of_path, integrate_geodesic, path_action
from .measure import (
    DegeneratePairError,
    EllipticPair,
    MeasureReport,
    busemann_hausdorff,
    complete_elliptic,
    holmes_thompson,
    indicatrix_reduction_check,
    lambda_pair,
    pencil_integrals,
)
from .riemann import (
    MetricField,
    NotPositiveDefiniteError,
    christoffels_and_spray,
    evaluate_metric,
    gauss_curvature,
    symmetric_polynomials,
)
from .suites import run_suite

__version__ = "0.1.0"
