"""Stable dual graphs and boundary strata on moduli of curves, genus <= 2.

A boundary stratum is encoded by a stable graph: vertices carry a genus, a
set of marking legs and a set of half-edge ids; edges are unordered pairs of
half-edge ids (both ends on one vertex gives a loop).  A decorated stratum
additionally carries psi exponents on legs/half-edges and named vertex
decorations (the Weierstrass-node condition is the one shipped decoration).

Equality of strata is equality up to graph isomorphism fixing the legs; the
canonical form is computed by brute-force minimisation over relabelings,
which at the same time counts the automorphism group order.  Graphs here
have at most a handful of vertices, so brute force is entirely adequate.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .errors import SpaceError, UnresolvedDecorationError, UnstableDivisorError
from .spaces import MarkedSpace

PsiKey = Union[str, int]  # leg label or half-edge id

# ---------------------------------------------------------------------------
# vertex decorations


@dataclass(frozen=True)
class Decoration:
    """A named codimension condition imposed on one vertex of a stratum.

    ``expansion`` is an optional callable mapping the vertex's marked space
    to a tautological expression for the condition's class; the shipped
    Weierstrass-node decoration deliberately has none.
    """

    name: str
    codim: int
    expansion: object = None


_DECORATIONS: dict[str, Decoration] = {}


def register_decoration(name: str, codim: int, expansion=None) -> Decoration:
    dec = Decoration(name, codim, expansion)
    _DECORATIONS[name] = dec
    return dec


def decoration(name: str) -> Decoration:
    try:
        return _DECORATIONS[name]
    except KeyError:
        raise SpaceError(f"unknown decoration {name!r}") from None


WEIERSTRASS_NODE = "weierstrass_node"
register_decoration(WEIERSTRASS_NODE, codim=1, expansion=None)


# ---------------------------------------------------------------------------
# boundary divisor ids


@dataclass(frozen=True)
class DivisorClassId:
    """Canonical name of a boundary divisor class.

    ``kind`` is "irr" for the irreducible-node divisor, "sep" for a
    two-component divisor; for the latter ``h`` is the genus of the side
    carrying the markings ``side``.
    """

    kind: str
    h: int = 0
    side: frozenset = frozenset()

    def __str__(self) -> str:
        if self.kind == "irr":
            return "d_irr"
        return f"d[{self.h};{','.join(sorted(self.side))}]"


IRR = DivisorClassId("irr")


def irreducible_divisor(sp: MarkedSpace) -> DivisorClassId:
    if sp.genus < 1:
        raise UnstableDivisorError("d_irr is the zero class in genus 0")
    return IRR


def _separating_sides_stable(sp: MarkedSpace, h: int, part: frozenset) -> bool:
    comp = frozenset(sp.markings) - part
    return (2 * h - 2 + len(part) + 1 > 0) and (2 * (sp.genus - h) - 2 + len(comp) + 1 > 0)


def separating_divisor(sp: MarkedSpace, h: int, side: Iterable[str]) -> DivisorClassId:
    """Canonical id of the divisor with a genus-``h`` component carrying ``side``.

    The two descriptions (h, P) and (g-h, P^c) name the same divisor; the
    canonical representative takes the larger genus, and for equal genera the
    side containing the lexicographically least marking (empty side stored
    as the empty set).  Unstable choices name the zero class and are rejected.
    """
    part = frozenset(side)
    if not 0 <= h <= sp.genus:
        raise UnstableDivisorError(f"no genus-{h} side inside genus {sp.genus}")
    if not part <= frozenset(sp.markings):
        raise SpaceError(f"side {sorted(part)} not among markings {sp.markings}")
    if not _separating_sides_stable(sp, h, part):
        raise UnstableDivisorError(
            f"d[{h};{','.join(sorted(part))}] is unstable on this space (zero class)"
        )
    comp = frozenset(sp.markings) - part
    h2 = sp.genus - h
    if h > h2:
        return DivisorClassId("sep", h, part)
    if h < h2:
        return DivisorClassId("sep", h2, comp)
    # symmetric genera
    if not part or not comp:
        return DivisorClassId("sep", h, frozenset())
    least = min(sp.markings)
    return DivisorClassId("sep", h, part if least in part else comp)


def enumerate_boundary_divisors(sp: MarkedSpace) -> frozenset:
    """All distinct boundary divisor classes of the space, canonical and stable."""
    found = set()
    if sp.genus >= 1:
        found.add(IRR)
    marks = list(sp.markings)
    for h in range(sp.genus + 1):
        for r in range(len(marks) + 1):
            for combo in itertools.combinations(marks, r):
                part = frozenset(combo)
                if _separating_sides_stable(sp, h, part):
                    found.add(separating_divisor(sp, h, part))
    return frozenset(found)


# ---------------------------------------------------------------------------
# stable graphs


@dataclass(frozen=True)
class Vertex:
    genus: int
    legs: frozenset
    half: frozenset

    @property
    def valence(self) -> int:
        return len(self.legs) + len(self.half)

    def dimension(self) -> int:
        return 3 * self.genus - 3 + self.valence


class StableGraph:
    """A connected stable dual graph on a fixed marked space."""

    def __init__(self, sp: MarkedSpace, vertices: Iterable[Vertex], edges: Iterable[frozenset]):
        self.space = sp
        self.vertices = tuple(vertices)
        self.edges = frozenset(frozenset(e) for e in edges)
        self._validate()

    def _validate(self) -> None:
        legs_seen: list[str] = []
        half_seen: list[int] = []
        for v in self.vertices:
            legs_seen.extend(v.legs)
            half_seen.extend(v.half)
        if sorted(legs_seen) != sorted(self.space.markings):
            raise SpaceError("graph legs do not match the space markings")
        if len(set(half_seen)) != len(half_seen):
            raise SpaceError("half-edge ids must be distinct")
        in_edges: list[int] = []
        for e in self.edges:
            if len(e) != 2:
                raise SpaceError("edges must join two distinct half-edges")
            in_edges.extend(e)
        if sorted(in_edges) != sorted(half_seen):
            raise SpaceError("every half-edge must lie on exactly one edge")
        for v in self.vertices:
            if v.genus < 0 or 2 * v.genus - 2 + v.valence <= 0:
                raise SpaceError(f"unstable vertex (genus {v.genus}, valence {v.valence})")
        if not self._connected():
            raise SpaceError("graph must be connected")
        b1 = len(self.edges) - len(self.vertices) + 1
        if sum(v.genus for v in self.vertices) + b1 != self.space.genus:
            raise SpaceError("total genus mismatch")

    def _connected(self) -> bool:
        if len(self.vertices) <= 1:
            return True
        owner = {h: i for i, v in enumerate(self.vertices) for h in v.half}
        adj: dict[int, set[int]] = {i: set() for i in range(len(self.vertices))}
        for e in self.edges:
            a, b = tuple(e)
            adj[owner[a]].add(owner[b])
            adj[owner[b]].add(owner[a])
        seen = {0}
        todo = [0]
        while todo:
            for w in adj[todo.pop()]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return len(seen) == len(self.vertices)

    # -- simple accessors ---------------------------------------------------

    def vertex_of_leg(self, label: str) -> int:
        for i, v in enumerate(self.vertices):
            if label in v.legs:
                return i
        raise SpaceError(f"no leg {label!r} in graph")

    def vertex_of_half(self, h: int) -> int:
        for i, v in enumerate(self.vertices):
            if h in v.half:
                return i
        raise SpaceError(f"no half-edge {h} in graph")

    def partner(self, h: int) -> int:
        for e in self.edges:
            if h in e:
                a, b = tuple(e)
                return b if a == h else a
        raise SpaceError(f"half-edge {h} lies on no edge")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def fresh_half_ids(self, count: int) -> list[int]:
        top = max((h for v in self.vertices for h in v.half), default=-1)
        return [top + 1 + i for i in range(count)]

    def __repr__(self) -> str:
        vs = "; ".join(
            f"(g={v.genus},legs={sorted(v.legs)},he={sorted(v.half)})" for v in self.vertices
        )
        es = sorted(tuple(sorted(e)) for e in self.edges)
        return f"StableGraph[{vs} | edges={es}]"


def trivial_graph(sp: MarkedSpace) -> StableGraph:
    return StableGraph(sp, [Vertex(sp.genus, frozenset(sp.markings), frozenset())], [])


def divisor_to_graph(sp: MarkedSpace, div: DivisorClassId) -> StableGraph:
    """The one-edge graph of a boundary divisor; raises on the zero class."""
    if div.kind == "irr":
        if sp.genus < 1:
            raise UnstableDivisorError("d_irr is zero in genus 0")
        v = Vertex(sp.genus - 1, frozenset(sp.markings), frozenset({0, 1}))
        return StableGraph(sp, [v], [frozenset({0, 1})])
    comp = frozenset(sp.markings) - div.side
    if not _separating_sides_stable(sp, div.h, div.side):
        raise UnstableDivisorError(f"{div} is the zero class on this space")
    v0 = Vertex(div.h, div.side, frozenset({0}))
    v1 = Vertex(sp.genus - div.h, comp, frozenset({1}))
    return StableGraph(sp, [v0, v1], [frozenset({0, 1})])


def banana_stratum(sp: MarkedSpace, genus1_side: Iterable[str]) -> "DecoratedStratum":
    """Two-edge stratum: a genus-1 component meeting a rational one twice.

    ``genus1_side`` lists the markings on the genus-1 component; the rational
    side needs at least one marking for stability.
    """
    if sp.genus != 2:
        raise SpaceError("the two-bridge banana stratum lives in genus 2")
    part = frozenset(genus1_side)
    comp = frozenset(sp.markings) - part
    if not part <= frozenset(sp.markings):
        raise SpaceError("genus-1 side labels not among markings")
    if len(comp) + 2 < 3:
        raise UnstableDivisorError("rational side of the banana needs a marking")
    v0 = Vertex(1, part, frozenset({0, 2}))
    v1 = Vertex(0, comp, frozenset({1, 3}))
    g = StableGraph(sp, [v0, v1], [frozenset({0, 1}), frozenset({2, 3})])
    return DecoratedStratum(g)


# ---------------------------------------------------------------------------
# decorated strata, canonical form and automorphisms


class DecoratedStratum:
    """A stable graph with psi exponents on legs/half-edges and decorations.

    ``psi`` maps leg labels and half-edge ids to positive exponents;
    ``decorations`` is a collection of (vertex index, decoration name).
    Instances compare and hash by canonical form (graph isomorphism fixing
    the legs and preserving exponents and decorations).
    """

    def __init__(
        self,
        graph: StableGraph,
        psi: Optional[Mapping[PsiKey, int]] = None,
        decorations: Iterable[tuple[int, str]] = (),
    ):
        self.graph = graph
        self.psi = {k: int(e) for k, e in (psi or {}).items() if e}
        self.decorations = frozenset(decorations)
        valid_keys = set()
        for v in graph.vertices:
            valid_keys |= v.legs | v.half
        for k, e in self.psi.items():
            if k not in valid_keys:
                raise SpaceError(f"psi key {k!r} not a leg or half-edge of the graph")
            if e < 0:
                raise SpaceError("negative psi exponent")
        for vi, name in self.decorations:
            if not 0 <= vi < len(graph.vertices):
                raise SpaceError("decoration on a missing vertex")
            decoration(name)  # must be registered
        self._canon: Optional[tuple] = None
        self._aut: Optional[int] = None
        self._best_labeling = None

    # -- codimension --------------------------------------------------------

    def codim(self) -> int:
        dec = sum(decoration(name).codim for _, name in self.decorations)
        return self.graph.n_edges + sum(self.psi.values()) + dec

    def vertex_psi_degree(self, vi: int) -> int:
        v = self.graph.vertices[vi]
        return sum(e for k, e in self.psi.items() if k in v.legs or k in v.half)

    def vertex_decoration_codim(self, vi: int) -> int:
        return sum(decoration(name).codim for i, name in self.decorations if i == vi)

    def is_zero_class(self) -> bool:
        """True when some vertex carries more codimension than its dimension."""
        for vi, v in enumerate(self.graph.vertices):
            if self.vertex_psi_degree(vi) + self.vertex_decoration_codim(vi) > v.dimension():
                return True
        return False

    # -- canonical labeling -------------------------------------------------

    def _vertex_invariant(self, vi: int) -> tuple:
        v = self.graph.vertices[vi]
        decs = tuple(sorted(name for i, name in self.decorations if i == vi))
        he_psi = tuple(sorted(self.psi.get(h, 0) for h in v.half))
        leg_psi = tuple(sorted((l, self.psi.get(l, 0)) for l in v.legs))
        return (v.genus, tuple(sorted(v.legs)), len(v.half), decs, he_psi, leg_psi)

    def _labelings(self):
        """Yield (vertex_order, per-vertex half-edge orders) over all symmetries.

        Vertex orders run over permutations preserving the invariant-sorted
        grouping; half-edge orders run over all per-vertex permutations.
        This family is closed under composition with automorphisms.
        """
        n = len(self.graph.vertices)
        idx = sorted(range(n), key=self._vertex_invariant)
        groups: list[list[int]] = []
        for i in idx:
            if groups and self._vertex_invariant(groups[-1][0]) == self._vertex_invariant(i):
                groups[-1].append(i)
            else:
                groups.append([i])
        for perm_parts in itertools.product(*(itertools.permutations(g) for g in groups)):
            order = tuple(itertools.chain.from_iterable(perm_parts))
            he_pools = [sorted(self.graph.vertices[vi].half) for vi in order]
            for he_orders in itertools.product(*(itertools.permutations(p) for p in he_pools)):
                yield order, he_orders

    def _encode(self, order, he_orders) -> tuple:
        new_id: dict[int, int] = {}
        counter = 0
        for hes in he_orders:
            for h in hes:
                new_id[h] = counter
                counter += 1
        verts = []
        for pos, vi in enumerate(order):
            v = self.graph.vertices[vi]
            decs = tuple(sorted(name for i, name in self.decorations if i == vi))
            verts.append(
                (
                    v.genus,
                    tuple(sorted(v.legs)),
                    tuple(self.psi.get(h, 0) for h in he_orders[pos]),
                    decs,
                )
            )
        edges = tuple(sorted(tuple(sorted((new_id[a], new_id[b]))) for a, b in map(tuple, self.graph.edges)))
        leg_psi = tuple(sorted((l, e) for l, e in self.psi.items() if isinstance(l, str)))
        return (tuple(verts), edges, leg_psi)

    def _canonicalize(self) -> None:
        best = None
        count = 0
        best_labeling = None
        for order, he_orders in self._labelings():
            enc = self._encode(order, he_orders)
            if best is None or enc < best:
                best = enc
                count = 1
                best_labeling = (order, he_orders)
            elif enc == best:
                count += 1
        self._canon = best
        self._aut = count
        self._best_labeling = best_labeling

    @property
    def canonical_key(self) -> tuple:
        if self._canon is None:
            self._canonicalize()
        return self._canon

    @property
    def aut_order(self) -> int:
        """Order of the automorphism group fixing legs, psi and decorations."""
        if self._aut is None:
            self._canonicalize()
        return self._aut

    def canonical_form(self) -> "DecoratedStratum":
        """An isomorphic stratum with vertices ordered and half-edges 0..2E-1."""
        if self._canon is None or self._best_labeling is None:
            self._canonicalize()
        order, he_orders = self._best_labeling
        new_id: dict[int, int] = {}
        counter = 0
        for hes in he_orders:
            for h in hes:
                new_id[h] = counter
                counter += 1
        verts = []
        for pos, vi in enumerate(order):
            v = self.graph.vertices[vi]
            verts.append(Vertex(v.genus, v.legs, frozenset(new_id[h] for h in v.half)))
        edges = [frozenset({new_id[a], new_id[b]}) for a, b in map(tuple, self.graph.edges)]
        graph = StableGraph(self.graph.space, verts, edges)
        psi = {}
        for k, e in self.psi.items():
            psi[k if isinstance(k, str) else new_id[k]] = e
        pos_of = {vi: pos for pos, vi in enumerate(order)}
        decs = frozenset((pos_of[vi], name) for vi, name in self.decorations)
        out = DecoratedStratum(graph, psi, decs)
        out._canon = self._canon
        out._aut = self._aut
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, DecoratedStratum) and self.canonical_key == other.canonical_key

    def __hash__(self) -> int:
        return hash(self.canonical_key)

    def __repr__(self) -> str:
        return f"Stratum[{self.graph!r}; psi={self.psi}; dec={sorted(self.decorations)}]"

    # -- modifications ------------------------------------------------------

    def with_extra_psi(self, key: PsiKey, add: int = 1) -> "DecoratedStratum":
        psi = dict(self.psi)
        psi[key] = psi.get(key, 0) + add
        return DecoratedStratum(self.graph, psi, self.decorations)


def automorphism_factor(stratum: DecoratedStratum) -> Fraction:
    """1/|Aut| for the decorated stratum (loop half-edge swaps included)."""
    return Fraction(1, stratum.aut_order)


# ---------------------------------------------------------------------------
# contraction and divisor images


def contract_edges(graph: StableGraph, drop: Iterable[frozenset]) -> StableGraph:
    """Contract the listed edges (loops add genus, bridges merge vertices)."""
    verts = [[v.genus, set(v.legs), set(v.half)] for v in graph.vertices]
    edges = set(graph.edges)
    for e in drop:
        if e not in edges:
            raise SpaceError("contracting a missing edge")
        a, b = tuple(e)
        ia = next(i for i, v in enumerate(verts) if a in v[2])
        ib = next(i for i, v in enumerate(verts) if b in v[2])
        if ia == ib:
            verts[ia][0] += 1
            verts[ia][2] -= {a, b}
        else:
            keep, gone = min(ia, ib), max(ia, ib)
            verts[keep][0] += verts[gone][0]
            verts[keep][1] |= verts[gone][1]
            verts[keep][2] |= verts[gone][2]
            verts[keep][2] -= {a, b}
            del verts[gone]
        edges.remove(e)
    return StableGraph(
        graph.space,
        [Vertex(g, frozenset(l), frozenset(h)) for g, l, h in verts],
        edges,
    )


def edge_image_divisor(graph: StableGraph, edge: frozenset) -> DivisorClassId:
    """The boundary divisor obtained by contracting every edge except one."""
    one = contract_edges(graph, [e for e in graph.edges if e != edge])
    if len(one.vertices) == 1:
        return IRR
    v0 = one.vertices[0]
    return separating_divisor(one.space, v0.genus, v0.legs)


# ---------------------------------------------------------------------------
# degeneration (specialization)


@dataclass(frozen=True)
class Degeneration:
    """One-edge degeneration of a stratum: the new stratum and its new edge."""

    stratum: DecoratedStratum
    new_edge: frozenset
    is_loop: bool


@dataclass(frozen=True)
class Specialization:
    degenerations: tuple
    self_edges: tuple


def _remap_decorations(decorations, split_at: Optional[int] = None, offset_from: Optional[int] = None):
    out = []
    for vi, name in decorations:
        if split_at is not None and vi == split_at:
            raise UnresolvedDecorationError(
                f"cannot degenerate a vertex carrying decoration {name!r}"
            )
        if offset_from is not None and vi >= offset_from:
            out.append((vi + 1, name))
        else:
            out.append((vi, name))
    return out


def one_edge_degenerations(stratum: DecoratedStratum):
    """Yield every one-edge degeneration of the stratum's graph.

    Splits replace a vertex by two vertices joined by the new edge (marks
    distributed, genera adding up); loops reduce a vertex genus by one and
    attach the new edge as a loop.  Decorated vertices cannot be degenerated
    without a class expansion, so those raise.
    """
    g = stratum.graph
    for vi, v in enumerate(g.vertices):
        marks = sorted(v.legs, key=str) + sorted(v.half)
        n1, n2 = g.fresh_half_ids(2)
        # genus-reducing loop
        if v.genus >= 1:
            decs = _remap_decorations(stratum.decorations, split_at=vi)
            new_v = Vertex(v.genus - 1, v.legs, v.half | {n1, n2})
            verts = list(g.vertices)
            verts[vi] = new_v
            graph = StableGraph(g.space, verts, set(g.edges) | {frozenset({n1, n2})})
            yield Degeneration(
                DecoratedStratum(graph, stratum.psi, decs),
                frozenset({n1, n2}),
                True,
            )
        # splits: unordered (g1, A) | (g2, B)
        for g1 in range(v.genus + 1):
            g2 = v.genus - g1
            if g1 > g2:
                continue
            for r in range(len(marks) + 1):
                for combo in itertools.combinations(marks, r):
                    a = set(combo)
                    b = set(marks) - a
                    if g1 == g2 and tuple(sorted(map(repr, a))) > tuple(sorted(map(repr, b))):
                        continue  # unordered pair, keep one representative
                    if 2 * g1 - 2 + len(a) + 1 <= 0 or 2 * g2 - 2 + len(b) + 1 <= 0:
                        continue
                    decs = _remap_decorations(stratum.decorations, split_at=vi, offset_from=vi + 1)
                    va = Vertex(g1, frozenset(x for x in a if isinstance(x, str)),
                                frozenset(x for x in a if isinstance(x, int)) | {n1})
                    vb = Vertex(g2, frozenset(x for x in b if isinstance(x, str)),
                                frozenset(x for x in b if isinstance(x, int)) | {n2})
                    verts = list(g.vertices[:vi]) + [va, vb] + list(g.vertices[vi + 1:])
                    graph = StableGraph(g.space, verts, set(g.edges) | {frozenset({n1, n2})})
                    yield Degeneration(
                        DecoratedStratum(graph, stratum.psi, decs),
                        frozenset({n1, n2}),
                        False,
                    )


def specialize(stratum: DecoratedStratum, div: DivisorClassId) -> Specialization:
    """Degenerations of the stratum lying over one boundary divisor.

    Returns the one-edge degenerations whose new edge maps to ``div`` when
    every original edge is contracted, together with the stratum's own edges
    already mapping to ``div`` (the self cases, which the caller turns into
    excess -psi'-psi'' terms).
    """
    divisor_to_graph(stratum.graph.space, div)  # validates stability on this space
    degs = tuple(
        d for d in one_edge_degenerations(stratum)
        if edge_image_divisor(d.stratum.graph, d.new_edge) == div
    )
    selfs = tuple(e for e in stratum.graph.edges if edge_image_divisor(stratum.graph, e) == div)
    return Specialization(degs, selfs)


# ---------------------------------------------------------------------------
# serialization


def graph_to_json_dict(graph: StableGraph) -> dict:
    return {
        "genus": graph.space.genus,
        "markings": list(graph.space.markings),
        "vertices": [
            {"genus": v.genus, "legs": sorted(v.legs), "half_edges": sorted(v.half)}
            for v in graph.vertices
        ],
        "edges": sorted(sorted(e) for e in graph.edges),
    }


def stratum_to_json_dict(stratum: DecoratedStratum) -> dict:
    canon = stratum.canonical_form()
    return {
        "graph": graph_to_json_dict(canon.graph),
        "psi_legs": {k: e for k, e in sorted(canon.psi.items(), key=str) if isinstance(k, str)},
        "psi_half_edges": {str(k): e for k, e in sorted(canon.psi.items(), key=str) if isinstance(k, int)},
        "decorations": sorted([vi, name] for vi, name in canon.decorations),
    }


def graph_to_json(graph: StableGraph) -> str:
    return json.dumps(graph_to_json_dict(graph), sort_keys=True)
