"""Bernstein-like bases and generalized Bernstein operators for exponential polynomials."""

from .basis import (
    BasisJets,
    BernsteinBasis,
    boundary_ratio,
    build_basis,
    connection_constant,
    d_coefficients,
    equidistant_basis,
    exp_in_basis,
    expand_in_basis,
    limit_ratio,
    polynomial_basis,
    two_point_jets,
)
from .convergence import (
    ConvergenceReport,
    FamilySpec,
    convergence_study,
    family_operator,
    hypothesis_report,
    morigi_neamtu_family,
    test_function,
)
from .errors import (
    ConstructionError,
    ExpBernError,
    LimitUnresolvedError,
    MissingNodesError,
    NonFiniteError,
    NotChebyshevError,
    OrderMismatchError,
    OrderUndeterminedError,
)
from .exppoly import (
    EigenvalueMultiset,
    ExpPoly,
    canonicalize,
    equivalent,
    is_conjugate_closed,
)
from .fundamental import (
    ChebyshevDiagnosis,
    chebyshev_interval_test,
    chebyshev_pair_test,
    fundamental_function,
    hankel_value,
)
from .operator import (
    BernsteinOperator,
    apply,
    build_operator,
    build_operator_confluent,
    classical_operator,
    equidistant_operator,
    fixed_point_residuals,
    muntz_to_exponential,
    node_consistency,
)

__version__ = "0.1.0"

__all__ = [
    "BasisJets",
    "BernsteinBasis",
    "boundary_ratio",
    "build_basis",
    "connection_constant",
    "d_coefficients",
    "equidistant_basis",
    "exp_in_basis",
    "expand_in_basis",
    "limit_ratio",
    "polynomial_basis",
    "two_point_jets",
    "ConvergenceReport",
    "FamilySpec",
    "convergence_study",
    "family_operator",
    "hypothesis_report",
    "morigi_neamtu_family",
    "test_function",
    "ConstructionError",
    "ExpBernError",
    "LimitUnresolvedError",
    "MissingNodesError",
    "NonFiniteError",
    "NotChebyshevError",
    "OrderMismatchError",
    "OrderUndeterminedError",
    "EigenvalueMultiset",
    "ExpPoly",
    "canonicalize",
    "equivalent",
    "is_conjugate_closed",
    "ChebyshevDiagnosis",
    "chebyshev_interval_test",
    "chebyshev_pair_test",
    "fundamental_function",
    "hankel_value",
    "BernsteinOperator",
    "apply",
    "build_operator",
    "build_operator_confluent",
    "classical_operator",
    "equidistant_operator",
    "fixed_point_residuals",
    "muntz_to_exponential",
    "node_consistency",
]
