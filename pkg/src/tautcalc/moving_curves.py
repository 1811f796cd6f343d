"""One-parameter families used to pair against divisor classes.

Two families are provided.  The conjugate-pair family fixes a general
genus-two curve with n free marked points and varies a conjugate pair
(+, -); its intersection numbers with the divisor basis are encoded by the
classical counts: the stable psi classes meet it in (2g-2) + (2g+2) = 8
points, the rational-tail divisor carrying the pair in the 2g+2 = 6
Weierstrass points, and every other generator in 0.  The admissible-cover
family only ever enters through its reduced genus-one integral, which the
engine recomputes; the undetermined positive power of two is carried as an
explicit flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DegreeError, SpaceError
from .expressions import (
    Monomial,
    TautExpr,
    divisor_expr,
    integrate,
    multiply,
    normalize,
    omega_expr,
    psi_expr,
    pushforward_forget,
)
from .graphs import DivisorClassId, enumerate_boundary_divisors, separating_divisor
from .spaces import MarkedSpace

PAIR_PLUS = "+"
PAIR_MINUS = "-"

BasisKey = Union[str, tuple, DivisorClassId]


def _conj_base_space() -> MarkedSpace:
    return MarkedSpace(2, (PAIR_PLUS, PAIR_MINUS))


def _conj_base_values() -> dict:
    """Divisor-basis values of the fixed-curve, moving-conjugate-pair family.

    psi values are (2g-2) + (2g+2); the rational-tail divisor through the
    pair meets the family in the 2g+2 Weierstrass points; lambda and the
    remaining boundary divisors meet it trivially.  kappa_1 is filled in
    through the standard relation kappa_1 = 12 lambda - delta + psi so the
    functional extends linearly to every divisor-degree canonical form.
    """
    g = 2
    sp = _conj_base_space()
    values: dict = {"lambda": Fraction(0)}
    psi_value = Fraction((2 * g - 2) + (2 * g + 2))
    for m in sp.markings:
        values[("psi", m)] = psi_value
    pair_tail = separating_divisor(sp, 2, frozenset())
    for div in enumerate_boundary_divisors(sp):
        values[div] = Fraction(2 * g + 2) if div == pair_tail else Fraction(0)
    delta_total = sum(values[d] for d in enumerate_boundary_divisors(sp))
    psi_total = sum(values[("psi", m)] for m in sp.markings)
    values[("kappa", 1)] = 12 * values["lambda"] - delta_total + psi_total
    return values


@dataclass(frozen=True)
class TestCurveFunctional:
    """Linear functional from divisor-degree expressions to rationals."""

    space: MarkedSpace
    free_labels: tuple
    provenance: str

    @property
    def values(self) -> dict:
        """Values on the full divisor basis of the functional's own space."""
        out: dict = {}
        out["lambda"] = self._evaluate_generator(Monomial.make(lam=1))
        for m in self.space.markings:
            out[("psi", m)] = self._evaluate_generator(Monomial.make(psi={m: 1}))
        out[("kappa", 1)] = self._evaluate_generator(Monomial.make(kappa=(1,)))
        for div in sorted(enumerate_boundary_divisors(self.space), key=str):
            out[div] = self._evaluate_generator(Monomial.make(strata=(div,)))
        return out

    def _evaluate_generator(self, mono: Monomial) -> Fraction:
        return pair(self, TautExpr(self.space, {mono: Fraction(1)}))


def conj_pair_family(n_free: int = 0) -> TestCurveFunctional:
    """The moving conjugate-pair family with ``n_free`` fixed free points."""
    if n_free < 0:
        raise SpaceError("number of free points must be non-negative")
    labels = (PAIR_PLUS, PAIR_MINUS) + tuple(f"p{i}" for i in range(1, n_free + 1))
    return TestCurveFunctional(
        MarkedSpace(2, labels), labels[2:], provenance="fixed-curve conjugate pair"
    )


def _descend_free_point(e: TautExpr, label: str) -> TautExpr:
    """Codimension-preserving descent along one free point.

    Multiplying by the stable psi class at the forgotten point and pushing
    forward recovers (2g-2) times the class below for pullbacks, so this is
    exact on the pullback classes the pairing is used for and extends the
    functional linearly to everything else.
    """
    g = e.space.genus
    pushed = pushforward_forget(multiply(omega_expr(e.space, label), e), label)
    return Fraction(1, 2 * g - 2) * pushed


def pair(f: TestCurveFunctional, e: TautExpr) -> Fraction:
    """Intersection number of the family with a divisor-degree expression."""
    if e.space != f.space:
        raise SpaceError("expression lives on a different space than the family")
    for mono in e.terms:
        if mono.codim(e.space) != 1:
            raise DegreeError("pairing needs a divisor-degree expression")
    for label in reversed(f.free_labels):
        e = _descend_free_point(e, label)
    base = _conj_base_values()
    ce = normalize(e)
    total = Fraction(0)
    for mono, coeff in ce.terms.items():
        total += coeff * _base_value(base, mono)
    return total


def _base_value(base: dict, mono: Monomial) -> Fraction:
    if mono.lam or mono.omega:  # canonical forms carry neither
        raise DegreeError("non-canonical generator in pairing")
    if mono.kappa:
        if mono.kappa == (1,) and not mono.psi and not mono.strata:
            return base[("kappa", 1)]
        raise DegreeError(f"no pairing value for generator {mono}")
    if mono.strata:
        s = mono.strata[0]
        if isinstance(s, DivisorClassId):
            return base[s]
        if s.graph.n_edges == 1 and not s.decorations and not s.psi:
            if len(s.graph.vertices) == 1:
                return base[DivisorClassId("irr")]
            v0 = s.graph.vertices[0]
            return base[separating_divisor(s.graph.space, v0.genus, v0.legs)]
        raise DegreeError(f"no pairing value for generator {mono}")
    if len(mono.psi) == 1 and mono.psi[0][1] == 1:
        return base[("psi", mono.psi[0][0])]
    if not mono.psi:
        raise DegreeError("codimension-zero term in divisor pairing")
    raise DegreeError(f"no pairing value for generator {mono}")


def pair_termwise(f: TestCurveFunctional, e: TautExpr) -> list:
    """Per-monomial pairing values of a raw expression, in print order."""
    out = []
    for mono, coeff in sorted(e.terms.items(), key=lambda kv: str(kv[0])):
        single = TautExpr(e.space, {mono: coeff})
        out.append((str(mono), pair(f, single)))
    return out


@dataclass(frozen=True)
class AdmissibleCoverPairing:
    """Reduced pairing of the admissible-cover family against its divisor.

    ``value`` is exact only up to the unspecified positive power of two
    recorded by ``up_to_positive_power_of_two``; the certified content is the
    value's sign.
    """

    n_free: int
    value: Fraction
    up_to_positive_power_of_two: bool = True

    @property
    def sign(self) -> int:
        return (self.value > 0) - (self.value < 0)


def b_curve_pairing(n_free: int = 0) -> AdmissibleCoverPairing:
    """Pair the admissible-cover family with the marked-Weierstrass divisor.

    Free points drop out first (the integrand is a pullback and the family
    pushes onto the one below), after which the pairing reduces to the
    genus-one integral of -psi against the two-Weierstrass-point class
    3 psi, which the engine evaluates exactly.
    """
    if n_free < 0:
        raise SpaceError("number of free points must be non-negative")
    from .hyperelliptic import HypClassId, class_of

    sp = MarkedSpace(1, ("w1", "w2"))
    genus1_class = class_of(HypClassId(ell=2, m=0, n=0, genus=1))
    value = integrate(multiply(-psi_expr(sp, "w1"), genus1_class))
    return AdmissibleCoverPairing(n_free=n_free, value=value)
