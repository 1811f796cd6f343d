"""The symbolic engine: normalization, products, pull/push, integration."""

import itertools
from fractions import Fraction

import pytest

from tautcalc import (
    DegreeError,
    MarkedSpace,
    SpaceError,
    UnresolvedDecorationError,
    UnsupportedError,
    divisor_expr,
    enumerate_boundary_divisors,
    expr_from_json_dict,
    expr_to_json_dict,
    integrate,
    irreducible_divisor,
    kappa_expr,
    lambda_expr,
    multiply,
    normalize,
    omega_expr,
    one,
    psi_expr,
    pullback_forget,
    pushforward_forget,
    separating_divisor,
    stratum_expr,
    weierstrass_node_stratum,
    zero,
)
from tautcalc.expressions import Monomial, TautExpr, _formal_product, _normalize_core


def sp2(*marks):
    return MarkedSpace(2, tuple(marks))


def d(sp, h, side=()):
    return divisor_expr(sp, separating_divisor(sp, h, frozenset(side)))


def d_irr(sp):
    return divisor_expr(sp, irreducible_divisor(sp))


class TestOmegaRewrite:
    def test_two_marks(self):
        sp = sp2("w", "p")
        got = normalize(omega_expr(sp, "p"))
        want = normalize(psi_expr(sp, "p") - d(sp, 2))
        assert got == want

    def test_three_marks(self):
        sp = sp2("w", "q", "p")
        got = normalize(omega_expr(sp, "p"))
        want = normalize(
            psi_expr(sp, "p") - d(sp, 2) - d(sp, 2, {"w"}) - d(sp, 2, {"q"})
        )
        assert got == want

    def test_single_mark_is_psi(self):
        sp = sp2("p")
        assert normalize(omega_expr(sp, "p")) == normalize(psi_expr(sp, "p"))

    def test_genus_zero_rejected(self):
        # on the three-pointed space the term dies by codimension first,
        # so use four markings to actually reach the rewrite
        sp = MarkedSpace(0, ("a", "b", "c", "e"))
        with pytest.raises(UnsupportedError):
            normalize(omega_expr(sp, "a"))

    def test_pullback_commutes_with_definition(self):
        # the stable psi class is the pullback of itself from fewer points,
        # in any order of adding the points
        sp = sp2("w", "p")
        via_pullback = normalize(pullback_forget(omega_expr(sp, "p"), "q"))
        direct = normalize(omega_expr(sp.add("q"), "p"))
        assert via_pullback == direct


class TestBoundaryMonomials:
    """Triple products on the unmarked genus-2 space, frozen from the
    boundary-restriction computation (gluing-map pullbacks evaluated on the
    genus-1 factors)."""

    @pytest.mark.parametrize(
        "powers,value",
        [
            ((3, 0), Fraction(-11, 12)),
            ((2, 1), Fraction(1, 4)),
            ((1, 2), Fraction(-1, 48)),
            ((0, 3), Fraction(1, 576)),
        ],
    )
    def test_triple_products(self, powers, value):
        sp = MarkedSpace(2, ())
        e = one(sp)
        for _ in range(powers[0]):
            e = multiply(e, d_irr(sp))
        for _ in range(powers[1]):
            e = multiply(e, d(sp, 1))
        assert integrate(e) == value

    def test_lambda_cube(self):
        sp = MarkedSpace(2, ())
        lam = lambda_expr(sp)
        assert integrate(multiply(multiply(lam, lam), lam)) == Fraction(1, 2880)

    def test_lambda_squared_is_pure_boundary(self):
        sp = MarkedSpace(2, ())
        e = normalize(multiply(lambda_expr(sp), lambda_expr(sp)))
        assert e.terms
        for mono in e.terms:
            assert mono.lam == 0 and not mono.psi and mono.strata

    def test_genus_one_lambda(self):
        sp = MarkedSpace(1, ("p",))
        assert integrate(lambda_expr(sp)) == Fraction(1, 24)
        assert integrate(psi_expr(sp, "p")) == Fraction(1, 24)
        assert integrate(d_irr(sp)) == Fraction(1, 2)


class TestMultiply:
    def test_identity(self):
        sp = sp2("w1", "w2")
        e = psi_expr(sp, "w1", 2) - 3 * d(sp, 2)
        assert multiply(one(sp), e) == normalize(e)

    def test_space_mismatch(self):
        with pytest.raises(SpaceError):
            multiply(one(sp2("a")), one(sp2("b")))

    def test_codim_overflow_is_zero(self):
        sp = sp2("w1", "w2")
        assert multiply(psi_expr(sp, "w1", 3), psi_expr(sp, "w2", 3)).is_zero()

    def test_self_intersection_excess(self):
        sp = sp2("w1", "w2")
        e = multiply(d(sp, 2), d(sp, 2))
        # single term: the tail graph decorated with -psi at the genus-2 node
        # (psi at the rational node vanishes on the three-pointed factor)
        assert len(e.terms) == 1
        ((mono, coeff),) = e.terms.items()
        assert coeff == -1
        s = mono.strata[0]
        assert s.graph.n_edges == 1 and sum(s.psi.values()) == 1
        (key,) = s.psi
        genus2_vertex = s.graph.vertices[s.graph.vertex_of_half(key)]
        assert genus2_vertex.genus == 2

    def test_self_intersection_integral(self):
        # check the excess expansion against an independent route:
        # d[2;]^2 * psi[w1] psi[w2] psi[w2]^2 evaluated by factor splitting
        sp = sp2("w1", "w2")
        e = multiply(d(sp, 2), d(sp, 2))
        val = integrate(multiply(e, multiply(psi_expr(sp, "w1"), psi_expr(sp, "w2", 2))))
        # tail integral: psi on the three-pointed rational factor vanishes,
        # so only -psi at the genus-2 node contributes:
        # -<tau_1 tau_2 tau_0 ...>: the genus-2 factor needs <tau_3> with one
        # point: -<tau_3>_2? dimension forces the value through wk directly:
        from tautcalc import wk

        assert val == -wk(2, (3,))
        assert val == 0  # dimension mismatch on the genus-2 factor

    def test_stratum_times_stratum_rejected(self):
        sp = sp2("w1", "w2", "p1", "p2")
        w = stratum_expr(sp, weierstrass_node_stratum(sp, ("w1", "w2")))
        g = stratum_expr(sp, weierstrass_node_stratum(sp, ("p1", "p2")))
        with pytest.raises(UnsupportedError):
            multiply(w, g)


class TestPullback:
    def test_psi_comparison(self):
        sp = sp2("w")
        big = sp.add("p")
        got = normalize(pullback_forget(psi_expr(sp, "w"), "p"))
        want = normalize(psi_expr(big, "w") - d(big, 2))
        assert got == want

    def test_divisor_two_sided_rule(self):
        sp = sp2("w", "q", "r")
        big = sp.add("p")
        got = normalize(pullback_forget(d(sp, 2, {"w"}), "p"))
        want = normalize(d(big, 2, {"w"}) + d(big, 2, {"w", "p"}))
        assert got == want

    def test_symmetric_divisor_collapse(self):
        # on the unmarked space both placements give the same divisor
        sp = MarkedSpace(2, ())
        big = sp.add("p")
        got = normalize(pullback_forget(d(sp, 1), "p"))
        want = normalize(d(big, 1, {"p"}))
        assert got == want

    def test_irr_and_lambda_pass_through(self):
        sp = sp2("w")
        assert normalize(pullback_forget(d_irr(sp), "p")) == normalize(d_irr(sp.add("p")))
        raw = pullback_forget(lambda_expr(sp), "p")
        assert list(raw.terms) == [Monomial.make(lam=1)]

    def test_kappa_rule(self):
        sp = sp2("w")
        big = sp.add("p")
        got = pullback_forget(kappa_expr(sp, 1), "p")
        want = kappa_expr(big, 1) - psi_expr(big, "p")
        assert got == want

    def test_unit(self):
        sp = sp2("w")
        assert normalize(pullback_forget(one(sp), "p")) == one(sp.add("p"))

    def test_fresh_label_required(self):
        sp = sp2("w")
        with pytest.raises(SpaceError):
            pullback_forget(one(sp), "w")


class TestPushforward:
    def test_omega_dilaton_values(self):
        sp = sp2("p1", "p2")
        assert pushforward_forget(omega_expr(sp, "p1"), "p1") == 2 * one(sp.forget("p1"))
        assert pushforward_forget(omega_expr(sp, "p2"), "p1").is_zero()

    def test_psi_dilaton(self):
        sp = sp2("w", "p")
        assert pushforward_forget(psi_expr(sp, "p"), "p") == 3 * one(sp.forget("p"))

    def test_string_shape(self):
        sp = sp2("w", "p")
        got = pushforward_forget(psi_expr(sp, "w", 2), "p")
        assert got == normalize(psi_expr(sp.forget("p"), "w"))

    def test_kappa_produced(self):
        sp = sp2("w", "p")
        got = pushforward_forget(psi_expr(sp, "p", 3), "p")
        assert got == kappa_expr(sp.forget("p"), 2)

    def test_section_divisor(self):
        sp = sp2("w", "p")
        got = pushforward_forget(d(sp, 2), "p")  # rational tail {w, p}
        assert got == one(sp.forget("p"))

    def test_unstable_target(self):
        sp = MarkedSpace(1, ("p",))
        with pytest.raises(SpaceError):
            pushforward_forget(psi_expr(sp, "p"), "p")

    def test_projection_formula(self):
        sp = sp2("a", "b")
        big = sp.add("q")
        a_classes = [
            psi_expr(sp, "a"),
            d(sp, 1, {"a"}),
            d_irr(sp),
            lambda_expr(sp),
        ]
        big_classes = [
            multiply(psi_expr(big, "q", 3), psi_expr(big, "a", 2)),
            multiply(psi_expr(big, "b", 4), psi_expr(big, "q")),
            multiply(d(big, 2), psi_expr(big, "q", 4)),
            multiply(d_irr(big), multiply(psi_expr(big, "q"), psi_expr(big, "b", 3))),
        ]
        for a_cls in a_classes:
            for e_big in big_classes:
                lhs = integrate(multiply(pullback_forget(a_cls, "q"), e_big))
                rhs = integrate(multiply(a_cls, pushforward_forget(e_big, "q")))
                assert lhs == rhs

    def test_adjunction_vanishing(self):
        sp = sp2("a", "b")
        for e in [psi_expr(sp, "a"), d_irr(sp), d(sp, 1, {"b"}), lambda_expr(sp)]:
            assert pushforward_forget(pullback_forget(e, "q"), "q").is_zero()

    def test_banana_pushforward_drops(self):
        # forgetting a rational-side leg of the two-bridge stratum kills it
        from tautcalc import banana_stratum

        sp = sp2("p", "q")
        s = banana_stratum(sp, frozenset())
        assert pushforward_forget(stratum_expr(sp, s), "p").is_zero()


class TestIntegrate:
    def test_factorized_tail(self):
        sp = sp2("w1", "w2")
        e = multiply(
            multiply(psi_expr(sp, "w1", 2), psi_expr(sp, "w2", 2)), d(sp, 1, {"w1"})
        )
        assert integrate(e) == Fraction(1, 576)

    def test_irr_with_gluing_factor(self):
        sp = sp2("w1", "w2")
        assert integrate(multiply(psi_expr(sp, "w1", 4), d_irr(sp))) == Fraction(1, 48)

    def test_non_top_degree_is_error(self):
        sp = sp2("w1", "w2")
        with pytest.raises(DegreeError):
            integrate(psi_expr(sp, "w1"))
        with pytest.raises(DegreeError):
            integrate(multiply(lambda_expr(sp), lambda_expr(sp)))

    def test_zero_expression(self):
        assert integrate(zero(sp2("w1", "w2"))) == 0

    def test_kappa_elimination(self):
        # kappa_1 on the one-pointed genus-2 space against psi^3:
        # realized as an extra-point integral, and the value must agree with
        # the pushforward relation pi_*(psi^2) = kappa_1.
        sp = sp2("w")
        big = sp.add("q")
        via_kappa = integrate(multiply(kappa_expr(sp, 1), psi_expr(sp, "w", 3)))
        via_push = integrate(
            multiply(psi_expr(big, "q", 2), pullback_forget(psi_expr(sp, "w", 3), "q"))
        )
        assert via_kappa == via_push == Fraction(29, 5760)

    def test_unresolved_decoration(self):
        sp = sp2("w1", "w2", "p1")
        w = stratum_expr(sp, weierstrass_node_stratum(sp, ("w1", "w2")))
        with pytest.raises(UnresolvedDecorationError):
            integrate(multiply(w, psi_expr(sp, "p1", 4)))

    def test_decoration_zero_by_dimension_is_fine(self):
        sp = sp2("w1", "w2")
        w = stratum_expr(sp, weierstrass_node_stratum(sp, ("w1", "w2")))
        assert integrate(multiply(w, psi_expr(sp, "w1", 3))) == 0

    def test_dimension_gate_against_splittings(self):
        # every vertex degree splitting off the top contributes exactly zero
        sp = sp2("w1", "w2")
        div = d(sp, 1, {"w1"})
        total = integrate(
            multiply(div, multiply(psi_expr(sp, "w1", 3), psi_expr(sp, "w2", 1)))
        )
        # brute force over splittings of the decorated tail:
        # genus-1 factors have dimensions 2 and 2; degrees (3,1) mismatch
        assert total == 0


class TestGenus0Reduction:
    def test_m04_boundary_points_identified(self):
        # the three splittings of a genus-0 four-marked factor are one class,
        # so the three chain routes through d[2;...] share a canonical form
        sp = sp2("p1", "p2", "p3")
        base = d(sp, 2)
        chains = [multiply(d(sp, 2, {t}), base) for t in sp.markings]
        assert chains[0] == chains[1] == chains[2]
        # psi on the rational tail reduces into the same chain class
        psi_route = multiply(psi_expr(sp, "p1"), base)
        assert psi_route == chains[0]

    def test_reduction_preserves_integrals(self):
        sp = sp2("p1", "p2", "p3")
        base = d(sp, 2)
        prod = multiply(omega_expr(sp, "p1"), base)
        raw = _normalize_core(_formal_product(omega_expr(sp, "p1"), base))
        for exps in [(3, 0, 0), (2, 1, 0), (1, 1, 1), (0, 2, 1)]:
            psi_m = one(sp)
            for label, a in zip(sp.markings, exps):
                if a:
                    psi_m = multiply(psi_m, psi_expr(sp, label, a))
            assert integrate(multiply(prod, psi_m)) == integrate(_formal_product(raw, psi_m))


def _key(expr):
    return tuple(sorted((str(m), c) for m, c in expr.terms.items()))


class TestSerialization:
    def test_roundtrip(self):
        sp = sp2("w1", "w2")
        exprs = [
            normalize(omega_expr(sp, "w1")),
            multiply(d(sp, 2), d(sp, 2)),
            kappa_expr(sp, 1) + Fraction(3, 7) * psi_expr(sp, "w2", 2),
            stratum_expr(sp, weierstrass_node_stratum(sp, ("w1", "w2"))),
        ]
        for e in exprs:
            back = expr_from_json_dict(expr_to_json_dict(e))
            assert normalize(back) == normalize(e)
