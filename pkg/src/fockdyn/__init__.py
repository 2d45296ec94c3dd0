"""Weighted Fock spaces F^p_(alpha, m) and the operators D, J, H, V_g, K_lambda acting on them."""

from .criteria import Classification, Verdict, classify, cross_check
from .dynamics import cesaro_report, d_hypercyclicity_sequence, gelfand_estimate, iterate_norm_sequence, ritt_sequence
from .operators import (
    CoeffOperator,
    OperatorSpec,
    SymbolPolynomial,
    apply,
    iterate_apply,
    k_lambda_apply,
    make_differentiation,
    make_hardy,
    make_integration,
    make_volterra,
)
from .space import QuadratureConfig, SpaceParams, TaylorSeries, monomial_norm_log, norm_log

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "CoeffOperator",
    "OperatorSpec",
    "QuadratureConfig",
    "SpaceParams",
    "SymbolPolynomial",
    "TaylorSeries",
    "Verdict",
    "apply",
    "cesaro_report",
    "classify",
    "cross_check",
    "d_hypercyclicity_sequence",
    "gelfand_estimate",
    "iterate_apply",
    "iterate_norm_sequence",
    "k_lambda_apply",
    "make_differentiation",
    "make_hardy",
    "make_integration",
    "make_volterra",
    "monomial_norm_log",
    "norm_log",
    "ritt_sequence",
]
