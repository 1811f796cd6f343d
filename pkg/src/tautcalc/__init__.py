"""Exact intersection calculus on moduli of stable curves of genus <= 2.

The package computes in the tautological ring with arbitrary-precision
rationals: psi intersection numbers through the string/dilaton/DVV
recursions, boundary-stratum combinatorics with automorphism bookkeeping,
canonical expression normal forms, pullback and pushforward along
forgetful maps, exact top-degree integration, moving-curve pairings and a
registry of marked hyperelliptic classes.
"""

from .errors import (
    CalcError,
    DegreeError,
    ExprParseError,
    SpaceError,
    UnresolvedDecorationError,
    UnstableDivisorError,
    UnsupportedError,
)
from .expressions import (
    Monomial,
    TautExpr,
    divisor_expr,
    expr_from_json_dict,
    expr_to_json,
    expr_to_json_dict,
    integrate,
    kappa_expr,
    lambda_expr,
    multiply,
    normalize,
    omega_expr,
    one,
    psi_expr,
    pullback_forget,
    pushforward_forget,
    stratum_expr,
    zero,
)
from .exprlang import format_expression, format_rational, parse_expression
from .graphs import (
    WEIERSTRASS_NODE,
    DecoratedStratum,
    Degeneration,
    DivisorClassId,
    StableGraph,
    Vertex,
    automorphism_factor,
    banana_stratum,
    contract_edges,
    divisor_to_graph,
    edge_image_divisor,
    enumerate_boundary_divisors,
    graph_to_json,
    graph_to_json_dict,
    irreducible_divisor,
    one_edge_degenerations,
    register_decoration,
    separating_divisor,
    specialize,
    stratum_to_json_dict,
    trivial_graph,
)
from .hyperelliptic import (
    HypClassId,
    NoGeneratorFormulaError,
    RegisteredExpression,
    REGISTRY,
    class_of,
    class_source,
    expected_pushforward_coefficient,
    registry_from_json_dict,
    registry_to_json_dict,
    verify_relations,
    weierstrass_node_stratum,
)
from .moving_curves import (
    AdmissibleCoverPairing,
    TestCurveFunctional,
    b_curve_pairing,
    conj_pair_family,
    pair,
    pair_termwise,
)
from .psi_numbers import dilaton_check, string_check, wk
from .spaces import MarkedSpace, dimension, space
from .verify import CheckResult, run_verification

__version__ = "0.1.0"
