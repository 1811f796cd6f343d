"""Stable graph combinatorics: dimensions, divisors, automorphisms, degenerations."""

import itertools

import pytest
from fractions import Fraction

from tautcalc import (
    DecoratedStratum,
    DivisorClassId,
    MarkedSpace,
    SpaceError,
    StableGraph,
    UnstableDivisorError,
    Vertex,
    automorphism_factor,
    banana_stratum,
    contract_edges,
    dimension,
    divisor_to_graph,
    edge_image_divisor,
    enumerate_boundary_divisors,
    irreducible_divisor,
    separating_divisor,
    specialize,
    trivial_graph,
)


def sp2(*marks):
    return MarkedSpace(2, tuple(marks))


class TestMarkedSpace:
    @pytest.mark.parametrize(
        "genus,marks,dim",
        [(2, ("w1", "w2"), 5), (0, ("a", "b", "c"), 0), (1, ("p",), 1), (2, (), 3)],
    )
    def test_dimension(self, genus, marks, dim):
        assert dimension(MarkedSpace(genus, marks)) == dim

    def test_unstable_space_rejected(self):
        with pytest.raises(SpaceError):
            MarkedSpace(0, ("a", "b"))
        with pytest.raises(SpaceError):
            MarkedSpace(1, ())

    def test_duplicate_labels_rejected(self):
        with pytest.raises(SpaceError):
            MarkedSpace(2, ("a", "a"))

    def test_genus_gate(self):
        with pytest.raises(SpaceError):
            MarkedSpace(3, ("a",))


class TestBoundaryEnumeration:
    def test_pair_space(self):
        sp = sp2("+", "-")
        expected = {
            irreducible_divisor(sp),
            separating_divisor(sp, 1, frozenset()),
            separating_divisor(sp, 1, frozenset({"+"})),
            separating_divisor(sp, 2, frozenset()),
        }
        assert enumerate_boundary_divisors(sp) == expected

    def test_one_pointed_genus_one(self):
        sp = MarkedSpace(1, ("p",))
        assert enumerate_boundary_divisors(sp) == {DivisorClassId("irr")}

    def test_unstable_side_excluded(self):
        sp = sp2("w", "p")
        with pytest.raises(UnstableDivisorError):
            separating_divisor(sp, 2, frozenset({"w"}))
        assert all(
            div.side != frozenset({"w"}) or div.h != 2
            for div in enumerate_boundary_divisors(sp)
        )

    def test_canonical_symmetry(self):
        sp = sp2("+", "-")
        a = separating_divisor(sp, 1, frozenset({"+"}))
        b = separating_divisor(sp, 1, frozenset({"-"}))
        assert a == b
        assert a.side == frozenset({"+"})  # side with the least marking

    def test_irr_only_with_positive_genus(self):
        assert DivisorClassId("irr") not in enumerate_boundary_divisors(
            MarkedSpace(0, ("a", "b", "c"))
        )


class TestGraphs:
    def test_divisor_graph_shapes(self):
        sp = sp2("w1", "w2")
        g = divisor_to_graph(sp, separating_divisor(sp, 2, frozenset()))
        assert sorted(v.genus for v in g.vertices) == [0, 2]
        g = divisor_to_graph(MarkedSpace(2, ()), DivisorClassId("irr"))
        assert len(g.vertices) == 1 and g.vertices[0].genus == 1

    def test_banana(self):
        sp = sp2("p")
        s = banana_stratum(sp, frozenset())
        assert s.graph.n_edges == 2
        assert sorted(v.genus for v in s.graph.vertices) == [0, 1]

    def test_banana_needs_rational_marking(self):
        with pytest.raises(UnstableDivisorError):
            banana_stratum(sp2("p"), frozenset({"p"}))

    def test_validation(self):
        sp = sp2("a")
        with pytest.raises(SpaceError):  # disconnected
            StableGraph(
                sp,
                [Vertex(1, frozenset({"a"}), frozenset({0, 1})),
                 Vertex(1, frozenset(), frozenset({2, 3}))],
                [frozenset({0, 1}), frozenset({2, 3})],
            )
        with pytest.raises(SpaceError):  # genus mismatch
            StableGraph(sp, [Vertex(0, frozenset({"a"}), frozenset({0, 1}))],
                        [frozenset({0, 1})])

    def test_codimension_of_divisor_graph_is_one(self):
        for marks in [(), ("a",), ("a", "b")]:
            sp = MarkedSpace(2, marks)
            for div in enumerate_boundary_divisors(sp):
                s = DecoratedStratum(divisor_to_graph(sp, div))
                assert s.codim() == 1


class TestAutomorphisms:
    def test_trivial(self):
        s = DecoratedStratum(trivial_graph(sp2("a", "b")))
        assert automorphism_factor(s) == 1

    def test_irr_loop_swap(self):
        sp = MarkedSpace(2, ())
        s = DecoratedStratum(divisor_to_graph(sp, DivisorClassId("irr")))
        assert automorphism_factor(s) == Fraction(1, 2)

    def test_banana_edge_swap(self):
        # genus-1 side empty, rational side {p}: the two edges swap
        s = banana_stratum(sp2("p"), frozenset())
        assert automorphism_factor(s) == Fraction(1, 2)

    def test_symmetric_two_genus_one(self):
        sp = MarkedSpace(2, ())
        s = DecoratedStratum(divisor_to_graph(sp, separating_divisor(sp, 1, frozenset())))
        assert automorphism_factor(s) == Fraction(1, 2)

    def test_psi_breaks_symmetry(self):
        sp = MarkedSpace(2, ())
        g = divisor_to_graph(sp, separating_divisor(sp, 1, frozenset()))
        h = sorted(g.vertices[0].half)[0]
        s = DecoratedStratum(g, {h: 1})
        assert automorphism_factor(s) == 1

    def test_double_loop_graph(self):
        sp = MarkedSpace(2, ())
        v1 = Vertex(0, frozenset(), frozenset({0, 1, 2}))
        v2 = Vertex(0, frozenset(), frozenset({3, 4, 5}))
        g = StableGraph(
            sp, [v1, v2],
            [frozenset({0, 1}), frozenset({3, 4}), frozenset({2, 5})],
        )
        # loop swap on each vertex and the vertex swap
        assert DecoratedStratum(g).aut_order == 8


class TestCanonicalForm:
    def test_idempotent(self):
        sp = sp2("+", "-")
        for div in enumerate_boundary_divisors(sp):
            s = DecoratedStratum(divisor_to_graph(sp, div))
            once = s.canonical_form()
            twice = once.canonical_form()
            assert once.canonical_key == twice.canonical_key == s.canonical_key

    def test_isomorphic_relabelings_agree(self):
        sp = sp2("a", "b")
        v0 = Vertex(1, frozenset({"a"}), frozenset({7}))
        v1 = Vertex(1, frozenset({"b"}), frozenset({3}))
        g1 = StableGraph(sp, [v0, v1], [frozenset({7, 3})])
        g2 = StableGraph(sp, [v1, v0], [frozenset({3, 7})])
        assert DecoratedStratum(g1) == DecoratedStratum(g2)


class TestSpecialize:
    def test_trivial_stratum_specializes_to_divisor(self):
        sp = sp2("+", "-")
        div = separating_divisor(sp, 1, frozenset())
        res = specialize(DecoratedStratum(trivial_graph(sp)), div)
        assert len(res.degenerations) == 1 and not res.self_edges
        got = res.degenerations[0].stratum
        assert got == DecoratedStratum(divisor_to_graph(sp, div))

    def test_self_intersection_flags(self):
        sp = sp2("w1", "w2")
        div = separating_divisor(sp, 2, frozenset())
        s = DecoratedStratum(divisor_to_graph(sp, div))
        res = specialize(s, div)
        assert not res.degenerations
        assert len(res.self_edges) == 1

    def test_chain_degenerations(self):
        sp = sp2("+", "-")
        s = DecoratedStratum(divisor_to_graph(sp, separating_divisor(sp, 1, frozenset({"+"}))))
        res = specialize(s, separating_divisor(sp, 1, frozenset()))
        # two chains: middle rational vertex carries + or -
        assert len(res.degenerations) == 2 and not res.self_edges
        for deg in res.degenerations:
            assert deg.stratum.graph.n_edges == 2

    def test_contraction_recovers_stratum(self):
        for marks in [(), ("a",), ("a", "b"), ("a", "b", "c")]:
            sp = MarkedSpace(2, marks)
            divisors = enumerate_boundary_divisors(sp)
            bases = [DecoratedStratum(trivial_graph(sp))] + [
                DecoratedStratum(divisor_to_graph(sp, d)) for d in sorted(divisors, key=str)
            ]
            for s in bases:
                for d in sorted(divisors, key=str):
                    for deg in specialize(s, d).degenerations:
                        back = contract_edges(deg.stratum.graph, [deg.new_edge])
                        assert DecoratedStratum(back) == s

    def test_edge_image_classification(self):
        # smoothing either banana node leaves a non-separating node
        sp = sp2("+", "-")
        s = banana_stratum(sp, frozenset({"+"}))
        for e in s.graph.edges:
            assert edge_image_divisor(s.graph, e) == DivisorClassId("irr")
        # a chain edge contracts onto the separating divisor it refines
        t = DecoratedStratum(divisor_to_graph(sp, separating_divisor(sp, 1, frozenset({"+"}))))
        (edge,) = t.graph.edges
        assert edge_image_divisor(t.graph, edge) == separating_divisor(sp, 1, frozenset({"+"}))


class TestSerialization:
    def test_graph_json_roundtrippable_fields(self):
        sp = sp2("+", "-")
        from tautcalc import graph_to_json_dict

        d = graph_to_json_dict(divisor_to_graph(sp, separating_divisor(sp, 2, frozenset())))
        assert d["genus"] == 2
        assert sorted(d["markings"]) == ["+", "-"]
        assert len(d["vertices"]) == 2 and len(d["edges"]) == 1
