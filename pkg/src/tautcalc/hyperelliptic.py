"""Registry of hyperelliptic-locus classes and their known expressions.

Classes are indexed by the number of marked Weierstrass points, marked
conjugate pairs and free points.  Only three families carry expressions:
the one-conjugate-pair divisor (Logan's class), the two-Weierstrass-point
codimension-two class (the Chen-Tarasca expression), and the genus-one
two-Weierstrass-point divisor 3 psi; the one-Weierstrass-point divisor is
derived inside the engine as one fifth of the pushforward of the
Chen-Tarasca class and is tagged as derived rather than sourced.  All
other indices are legitimate ids with no generator formula.

Free marked points are added by iterated pullback; the marking roles are
w1..wl, +1/-1..+m/-m (a single pair is labelled +/-) and p1..pn.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import SpaceError, UnsupportedError
from .expressions import (
    TautExpr,
    divisor_expr,
    expr_from_json_dict,
    expr_to_json_dict,
    lambda_expr,
    multiply,
    normalize,
    omega_expr,
    one,
    psi_expr,
    pullback_forget,
    pushforward_forget,
)
from .graphs import (
    WEIERSTRASS_NODE,
    DecoratedStratum,
    StableGraph,
    Vertex,
    irreducible_divisor,
    separating_divisor,
)
from .moving_curves import PAIR_MINUS, PAIR_PLUS
from .spaces import MarkedSpace

MAX_WEIERSTRASS = 6  # a genus-two curve has 2g + 2 = 6 Weierstrass points


class NoGeneratorFormulaError(UnsupportedError):
    """The class id is valid but no generator expression is registered."""


@dataclass(frozen=True)
class HypClassId:
    """Index of a marked hyperelliptic locus: (weierstrass, pairs, free)."""

    ell: int
    m: int
    n: int
    genus: int = 2

    def __post_init__(self):
        if self.genus not in (1, 2):
            raise SpaceError("hyperelliptic ids cover genus 1 and 2 only")
        if self.genus == 1 and (self.ell, self.m, self.n) != (2, 0, 0):
            raise SpaceError("the only genus-1 entry is two marked Weierstrass points")
        if not (0 <= self.ell <= MAX_WEIERSTRASS):
            raise SpaceError(f"at most {MAX_WEIERSTRASS} Weierstrass points in genus two")
        if self.m < 0 or self.n < 0:
            raise SpaceError("negative marking counts")

    @property
    def codim(self) -> int:
        return self.ell + self.m if self.genus == 2 else self.ell

    def marking_labels(self) -> tuple:
        w = tuple(f"w{i}" for i in range(1, self.ell + 1))
        if self.m == 1:
            pairs = (PAIR_PLUS, PAIR_MINUS)
        else:
            pairs = tuple(x for j in range(1, self.m + 1) for x in (f"+{j}", f"-{j}"))
        free = tuple(f"p{i}" for i in range(1, self.n + 1))
        return w + pairs + free

    def space(self) -> MarkedSpace:
        return MarkedSpace(self.genus, self.marking_labels())


def weierstrass_node_stratum(sp: MarkedSpace, rational_side) -> DecoratedStratum:
    """Two-component stratum whose node is a Weierstrass point.

    ``rational_side`` lists the markings on the rational component (at least
    two for stability); the genus-two component carries the rest and the
    codimension-one node condition.
    """
    if sp.genus != 2:
        raise SpaceError("the Weierstrass-node stratum lives in genus 2")
    rat = frozenset(rational_side)
    if not rat <= frozenset(sp.markings):
        raise SpaceError("rational-side labels not among markings")
    if len(rat) < 2:
        raise SpaceError("rational side needs at least two markings")
    v0 = Vertex(2, frozenset(sp.markings) - rat, frozenset({0}))
    v1 = Vertex(0, rat, frozenset({1}))
    graph = StableGraph(sp, [v0, v1], [frozenset({0, 1})])
    return DecoratedStratum(graph, {}, [(0, WEIERSTRASS_NODE)])


# ---------------------------------------------------------------------------
# the registered expressions


def _logan_class(sp: MarkedSpace) -> TautExpr:
    """-lambda + psi_+ + psi_- - 3 d[2;] - d[1;] on the two-pair-marks space."""
    return (
        -lambda_expr(sp)
        + psi_expr(sp, PAIR_PLUS)
        + psi_expr(sp, PAIR_MINUS)
        - 3 * divisor_expr(sp, separating_divisor(sp, 2, frozenset()))
        - divisor_expr(sp, separating_divisor(sp, 1, frozenset()))
    )


def _chen_tarasca_class(sp: MarkedSpace) -> TautExpr:
    """6 psi1 psi2 - 3/2 (psi1^2 + psi2^2) - (psi1 + psi2)(boundary part)."""
    w1, w2 = "w1", "w2"
    expr = 6 * multiply(psi_expr(sp, w1), psi_expr(sp, w2))
    expr = expr - Fraction(3, 2) * (
        multiply(psi_expr(sp, w1), psi_expr(sp, w1))
        + multiply(psi_expr(sp, w2), psi_expr(sp, w2))
    )
    boundary = (
        Fraction(21, 10) * divisor_expr(sp, separating_divisor(sp, 1, frozenset({w1})))
        + Fraction(3, 5) * divisor_expr(sp, separating_divisor(sp, 1, frozenset()))
        + Fraction(1, 20) * divisor_expr(sp, irreducible_divisor(sp))
    )
    return expr - multiply(psi_expr(sp, w1) + psi_expr(sp, w2), boundary)


def _genus1_two_weierstrass(sp: MarkedSpace) -> TautExpr:
    """3 psi at the first marked Weierstrass point on the genus-1 space."""
    return 3 * psi_expr(sp, "w1")


@dataclass(frozen=True)
class RegisteredExpression:
    id: HypClassId
    expr: TautExpr
    source: str


def _registry() -> dict:
    logan = HypClassId(0, 1, 0)
    ct = HypClassId(2, 0, 0)
    g1 = HypClassId(2, 0, 0, genus=1)
    return {
        logan: RegisteredExpression(logan, _logan_class(logan.space()), "logan-2003"),
        ct: RegisteredExpression(ct, _chen_tarasca_class(ct.space()), "chen-tarasca-2015-eq4"),
        g1: RegisteredExpression(g1, _genus1_two_weierstrass(g1.space()), "cavalieri-hurwitz"),
    }


REGISTRY = _registry()

_DERIVED_SOURCE = "derived: pushforward of chen-tarasca-2015-eq4 divided by 5"


def _derived_one_weierstrass() -> TautExpr:
    base = REGISTRY[HypClassId(2, 0, 0)].expr
    return Fraction(1, 5) * pushforward_forget(base, "w2")


def class_of(id: HypClassId) -> TautExpr:
    """Expression of a registered family, free points added by pullback.

    Families with expressions: (0, 1, n), (2, 0, n), the derived (1, 0, n)
    and the genus-one entry.  Anything else raises
    ``NoGeneratorFormulaError``: those classes exist but the registry does
    not invent generators for them.
    """
    if id.genus == 1:
        return REGISTRY[HypClassId(2, 0, 0, genus=1)].expr
    if (id.ell, id.m) == (0, 1):
        expr = REGISTRY[HypClassId(0, 1, 0)].expr
    elif (id.ell, id.m) == (2, 0):
        expr = REGISTRY[HypClassId(2, 0, 0)].expr
    elif (id.ell, id.m) == (1, 0):
        expr = _derived_one_weierstrass()
    else:
        raise NoGeneratorFormulaError(
            f"no generator formula is registered for (ell={id.ell}, m={id.m})"
        )
    for i in range(1, id.n + 1):
        expr = pullback_forget(expr, f"p{i}")
    return expr


def class_source(id: HypClassId) -> str:
    if id.genus == 1:
        return REGISTRY[HypClassId(2, 0, 0, genus=1)].source
    if (id.ell, id.m) == (1, 0):
        return _DERIVED_SOURCE
    key = HypClassId(id.ell, id.m, 0)
    if key in REGISTRY:
        return REGISTRY[key].source
    raise NoGeneratorFormulaError(f"no generator formula for (ell={id.ell}, m={id.m})")


def expected_pushforward_coefficient(id: HypClassId, forget: str) -> Fraction:
    """Multiplier picked up by the class under one forgetful pushforward.

    Forgetting a marked Weierstrass point multiplies by 6 - (ell - 1);
    forgetting one point of a marked conjugate pair (the other point becomes
    free) leaves the class unchanged.
    """
    if id.genus != 2:
        raise SpaceError("pushforward coefficients are for the genus-2 families")
    if forget == "w":
        if id.ell < 1:
            raise SpaceError("no Weierstrass marking to forget")
        return Fraction(MAX_WEIERSTRASS - (id.ell - 1))
    if forget == "+":
        if id.m < 1:
            raise SpaceError("no conjugate pair to forget")
        return Fraction(1)
    raise SpaceError("forgetful type must be 'w' or '+'")


# ---------------------------------------------------------------------------
# relation checks driving the induction bookkeeping


@dataclass(frozen=True)
class RelationCheck:
    name: str
    expected: str
    computed: str
    ok: bool


def verify_relations(max_n: int = 2) -> list:
    """Re-run the pushforward/pullback identities for the registered families.

    For each family with an expression: the stable-psi multiply-then-push
    step produces exactly twice the class below; the Weierstrass pushforward
    ladder has total coefficient 30 ending at the fundamental class; the
    conjugate-pair pushforward has coefficient one; and codimension
    bookkeeping matches ell + m throughout.
    """
    if max_n > 3:
        raise UnsupportedError("relation checks are sized for max_n <= 3")
    checks: list = []

    def record(name, expected, computed):
        if isinstance(expected, TautExpr):
            ok = normalize(expected) == normalize(computed)
        else:
            ok = expected == computed
        checks.append(RelationCheck(name, str(expected), str(computed), ok))

    for ell, m in ((0, 1), (2, 0), (1, 0)):
        for n in range(1, max_n + 1):
            big = class_of(HypClassId(ell, m, n))
            label = f"p{n}"
            pushed = pushforward_forget(multiply(omega_expr(big.space, label), big), label)
            small = normalize(class_of(HypClassId(ell, m, n - 1)))
            record(
                f"omega-step (ell={ell}, m={m}, n={n})",
                2 * small,
                pushed,
            )

    ct = class_of(HypClassId(2, 0, 0))
    once = pushforward_forget(ct, "w2")
    record("w-pushforward of the two-point class is 5x the derived class",
           normalize(5 * class_of(HypClassId(1, 0, 0))), once)
    twice = pushforward_forget(once, "w1")
    sp0 = MarkedSpace(2, ())
    record("double w-pushforward lands on 30 times the fundamental class",
           30 * one(sp0), twice)
    logan = class_of(HypClassId(0, 1, 0))
    plus_push = pushforward_forget(logan, PAIR_PLUS)
    record("conjugate-pair pushforward has coefficient 1",
           one(MarkedSpace(2, (PAIR_MINUS,))), plus_push)

    for ell, m in ((0, 1), (2, 0), (1, 0)):
        for n in range(0, max_n + 1):
            id_ = HypClassId(ell, m, n)
            expr = normalize(class_of(id_))
            codims = {mono.codim(expr.space) for mono in expr.terms}
            record(
                f"codimension of (ell={ell}, m={m}, n={n})",
                {id_.codim},
                codims,
            )
    return checks


# ---------------------------------------------------------------------------
# serialization


def registry_to_json_dict() -> dict:
    entries = []
    for id_, reg in sorted(REGISTRY.items(), key=lambda kv: str(kv[0])):
        entries.append(
            {
                "id": {"ell": id_.ell, "m": id_.m, "n": id_.n, "genus": id_.genus},
                "source": reg.source,
                "expr": expr_to_json_dict(reg.expr),
            }
        )
    return {"entries": entries}


def registry_from_json_dict(data: dict) -> dict:
    out = {}
    for entry in data["entries"]:
        id_ = HypClassId(**entry["id"])
        out[id_] = RegisteredExpression(id_, expr_from_json_dict(entry["expr"]), entry["source"])
    return out
