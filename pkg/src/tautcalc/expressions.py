"""Tautological expressions on a marked space: the symbolic engine.

An expression is a rational linear combination of monomials in psi, omega,
lambda and kappa symbols and boundary-stratum factors.  Canonical form
eliminates omega (stable-psi comparison) and lambda (genus <= 2 boundary
relations), expands all divisor products into decorated strata with
-psi'-psi'' excess on self-edges, and pushes ambient psi classes onto the
stratum legs.  On canonical forms the module provides exact pullback and
pushforward along forgetful maps and top-degree integration through the
psi-number engine.

Stratum coefficients follow the convention that a stratum symbol denotes
1/|Aut| times the pushforward of its psi decoration under the gluing map;
all expansion rules below carry the matching automorphism-ratio factors.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .errors import DegreeError, SpaceError, UnresolvedDecorationError, UnsupportedError
from .graphs import (
    DecoratedStratum,
    DivisorClassId,
    StableGraph,
    Vertex,
    decoration,
    divisor_to_graph,
    enumerate_boundary_divisors,
    irreducible_divisor,
    one_edge_degenerations,
    separating_divisor,
    specialize,
    stratum_to_json_dict,
    trivial_graph,
)
from .psi_numbers import wk
from .spaces import MarkedSpace

Rational = Fraction
StratumFactor = Union[DivisorClassId, DecoratedStratum]


def _factor_sort_key(f: StratumFactor) -> str:
    if isinstance(f, DivisorClassId):
        return "0:" + str(f)
    return "1:" + repr(f.canonical_key)


@dataclass(frozen=True)
class Monomial:
    """A single product of tautological symbols and stratum factors."""

    psi: tuple = ()
    omega: tuple = ()
    lam: int = 0
    kappa: tuple = ()
    strata: tuple = ()

    @staticmethod
    def make(
        psi: Optional[Mapping[str, int]] = None,
        omega: Optional[Mapping[str, int]] = None,
        lam: int = 0,
        kappa: Iterable[int] = (),
        strata: Iterable[StratumFactor] = (),
    ) -> "Monomial":
        return Monomial(
            psi=tuple(sorted((l, int(e)) for l, e in (psi or {}).items() if e)),
            omega=tuple(sorted((l, int(e)) for l, e in (omega or {}).items() if e)),
            lam=int(lam),
            kappa=tuple(sorted(int(a) for a in kappa)),
            strata=tuple(sorted(strata, key=_factor_sort_key)),
        )

    def psi_dict(self) -> dict:
        return dict(self.psi)

    def omega_dict(self) -> dict:
        return dict(self.omega)

    def codim(self, sp: MarkedSpace) -> int:
        total = sum(e for _, e in self.psi) + sum(e for _, e in self.omega) + self.lam
        total += sum(self.kappa)
        for f in self.strata:
            total += 1 if isinstance(f, DivisorClassId) else f.codim()
        return total

    def __str__(self) -> str:
        bits = [f"psi[{l}]^{e}" for l, e in self.psi]
        bits += [f"omega[{l}]^{e}" for l, e in self.omega]
        bits += ["lambda"] * self.lam
        bits += [f"kappa[{a}]" for a in self.kappa]
        bits += [str(f) for f in self.strata]
        return "*".join(bits) if bits else "1"


ONE = Monomial()


class TautExpr:
    """A finite rational combination of monomials on one marked space."""

    def __init__(self, sp: MarkedSpace, terms: Optional[Mapping[Monomial, Fraction]] = None):
        self.space = sp
        self.terms: dict[Monomial, Fraction] = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                self.terms[m] = c
        self._canonical = False

    # -- ring-ish operations -------------------------------------------------

    def __add__(self, other: "TautExpr") -> "TautExpr":
        if self.space != other.space:
            raise SpaceError("cannot add expressions on different spaces")
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return TautExpr(self.space, out)

    def __sub__(self, other: "TautExpr") -> "TautExpr":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "TautExpr":
        c0 = Fraction(scalar)
        return TautExpr(self.space, {m: c0 * c for m, c in self.terms.items()})

    def __neg__(self) -> "TautExpr":
        return (-1) * self

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TautExpr)
            and self.space == other.space
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.terms.items(), key=lambda kv: str(kv[0])))))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for m, c in sorted(self.terms.items(), key=lambda kv: str(kv[0])):
            bits.append(f"{c}*{m}")
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# builders


def zero(sp: MarkedSpace) -> TautExpr:
    return TautExpr(sp, {})


def one(sp: MarkedSpace) -> TautExpr:
    return TautExpr(sp, {ONE: Fraction(1)})


def psi_expr(sp: MarkedSpace, label: str, exp: int = 1) -> TautExpr:
    sp.require_label(label)
    return TautExpr(sp, {Monomial.make(psi={label: exp}): Fraction(1)})


def omega_expr(sp: MarkedSpace, label: str, exp: int = 1) -> TautExpr:
    sp.require_label(label)
    return TautExpr(sp, {Monomial.make(omega={label: exp}): Fraction(1)})


def lambda_expr(sp: MarkedSpace) -> TautExpr:
    return TautExpr(sp, {Monomial.make(lam=1): Fraction(1)})


def kappa_expr(sp: MarkedSpace, a: int) -> TautExpr:
    if a < 1:
        raise SpaceError("kappa index must be positive")
    return TautExpr(sp, {Monomial.make(kappa=(a,)): Fraction(1)})


def divisor_expr(sp: MarkedSpace, div: DivisorClassId) -> TautExpr:
    divisor_to_graph(sp, div)  # validate against this space
    return TautExpr(sp, {Monomial.make(strata=(div,)): Fraction(1)})


def stratum_expr(sp: MarkedSpace, stratum: DecoratedStratum) -> TautExpr:
    if stratum.graph.space != sp:
        raise SpaceError("stratum lives on a different space")
    return TautExpr(sp, {Monomial.make(strata=(stratum,)): Fraction(1)})


# ---------------------------------------------------------------------------
# lambda and omega elimination


def lambda_substitution(sp: MarkedSpace) -> TautExpr:
    """Boundary expression for the first Hodge class, genus gated.

    genus 0: zero; genus 1: d_irr/12; genus 2: d_irr/10 + (1/5) sum of the
    genus-one-side divisors (each unordered side pair counted once).
    """
    if sp.genus == 0:
        return zero(sp)
    if sp.genus == 1:
        return Fraction(1, 12) * divisor_expr(sp, irreducible_divisor(sp))
    if sp.genus == 2:
        out = Fraction(1, 10) * divisor_expr(sp, irreducible_divisor(sp))
        for div in sorted(enumerate_boundary_divisors(sp), key=str):
            if div.kind == "sep" and div.h == 1:
                out = out + Fraction(1, 5) * divisor_expr(sp, div)
        return out
    raise UnsupportedError("lambda elimination is gated to genus <= 2")


def omega_substitution(sp: MarkedSpace, label: str) -> TautExpr:
    """psi minus every rational-tail divisor whose tail contains the marking."""
    if sp.genus < 1:
        raise UnsupportedError("omega classes need genus >= 1")
    sp.require_label(label)
    out = psi_expr(sp, label)
    others = [m for m in sp.markings if m != label]
    for r in range(len(others)):  # |P| <= n-2 keeps the tail stable
        for combo in itertools.combinations(others, r):
            div = separating_divisor(sp, sp.genus, frozenset(combo))
            out = out - divisor_expr(sp, div)
    return out


# ---------------------------------------------------------------------------
# normalization


def _raw_merge(a: Monomial, b: Monomial) -> Monomial:
    psi = a.psi_dict()
    for l, e in b.psi:
        psi[l] = psi.get(l, 0) + e
    om = a.omega_dict()
    for l, e in b.omega:
        om[l] = om.get(l, 0) + e
    return Monomial.make(
        psi=psi,
        omega=om,
        lam=a.lam + b.lam,
        kappa=a.kappa + b.kappa,
        strata=a.strata + b.strata,
    )


def _formal_product(a: TautExpr, b: TautExpr) -> TautExpr:
    if a.space != b.space:
        raise SpaceError("cannot multiply expressions on different spaces")
    out: dict[Monomial, Fraction] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            m = _raw_merge(m1, m2)
            out[m] = out.get(m, Fraction(0)) + c1 * c2
    return TautExpr(a.space, out)


def _stratum_monomial(kappa: tuple, s: DecoratedStratum) -> Monomial:
    """Canonical monomial for a stratum; an edgeless one is a plain psi product."""
    if s.graph.n_edges == 0 and not s.decorations:
        return Monomial.make(psi={l: e for l, e in s.psi.items()}, kappa=kappa)
    return Monomial.make(kappa=kappa, strata=(s.canonical_form(),))


def _demote_stratum(s: DecoratedStratum):
    """Rewrite a one-edge undecorated stratum with leg-only psi as divisor * psi."""
    if s.graph.n_edges != 1 or s.decorations:
        return None
    if any(isinstance(k, int) for k in s.psi):
        return None
    g = s.graph
    if len(g.vertices) == 1:
        div = irreducible_divisor(g.space)
    else:
        v0 = g.vertices[0]
        div = separating_divisor(g.space, v0.genus, v0.legs)
    return div, dict(s.psi)


def _multiply_stratum_by_divisor(s: DecoratedStratum, div: DivisorClassId):
    """Expansion of divisor * stratum: degenerations plus -psi'-psi'' excess."""
    aut0 = s.aut_order
    out = []
    spec = specialize(s, div)
    for deg in spec.degenerations:
        if deg.stratum.is_zero_class():
            continue
        a_w = 2 if deg.is_loop else 1
        out.append((Fraction(deg.stratum.aut_order, a_w * aut0), deg.stratum))
    for e in spec.self_edges:
        for h in e:
            s2 = s.with_extra_psi(h)
            if s2.is_zero_class():
                continue
            out.append((Fraction(-s2.aut_order, aut0), s2))
    return out


def _expand_monomial(sp: MarkedSpace, mono: Monomial, coeff: Fraction):
    """Yield (coefficient, canonical monomial) pieces of one raw monomial."""
    if mono.lam:
        rest = Monomial(mono.psi, mono.omega, mono.lam - 1, mono.kappa, mono.strata)
        for m2, c2 in lambda_substitution(sp).terms.items():
            yield from _expand_monomial(sp, _raw_merge(rest, m2), coeff * c2)
        return
    if mono.omega:
        (label, e) = mono.omega[0]
        om = mono.omega_dict()
        if e == 1:
            del om[label]
        else:
            om[label] = e - 1
        rest = Monomial.make(mono.psi_dict(), om, 0, mono.kappa, mono.strata)
        for m2, c2 in omega_substitution(sp, label).terms.items():
            yield from _expand_monomial(sp, _raw_merge(rest, m2), coeff * c2)
        return

    psi = mono.psi_dict()
    divisors: list[DivisorClassId] = []
    opaque: list[DecoratedStratum] = []
    for f in mono.strata:
        if isinstance(f, DivisorClassId):
            divisors.append(f)
            continue
        if f.graph.n_edges == 0 and not f.decorations:
            for l, e in f.psi.items():
                psi[l] = psi.get(l, 0) + e
            continue
        dem = _demote_stratum(f)
        if dem is None:
            opaque.append(f)
        else:
            div, extra_psi = dem
            divisors.append(div)
            for l, e in extra_psi.items():
                psi[l] = psi.get(l, 0) + e
    if len(opaque) >= 2:
        raise UnsupportedError("direct product of two non-divisor strata is not supported")

    if not opaque and not divisors:
        m = Monomial.make(psi=psi, kappa=mono.kappa)
        yield coeff, m
        return

    divisors.sort(key=str)
    if opaque:
        stratum = opaque[0]
    else:
        stratum = DecoratedStratum(divisor_to_graph(sp, divisors.pop(0)))
    for l, e in psi.items():
        stratum = stratum.with_extra_psi(l, e)

    pieces = [(coeff, stratum)]
    for div in divisors:
        nxt = []
        for c, s in pieces:
            if s.is_zero_class():
                continue
            for c2, s2 in _multiply_stratum_by_divisor(s, div):
                nxt.append((c * c2, s2))
        pieces = nxt
    for c, s in pieces:
        if s.is_zero_class():
            continue
        yield c, _stratum_monomial(mono.kappa, s)


def _normalize_core(e: TautExpr) -> TautExpr:
    """Expansion pass only: no omega/lambda, divisor products expanded."""
    if e._canonical:
        return e
    dim = e.space.dimension()
    acc: dict[Monomial, Fraction] = {}
    for mono, coeff in e.terms.items():
        if mono.codim(e.space) > dim:
            continue  # codimension overflow is the zero class
        for c, m in _expand_monomial(e.space, mono, coeff):
            acc[m] = acc.get(m, Fraction(0)) + c
    out = TautExpr(e.space, acc)
    out._canonical = True
    return out


def normalize(e: TautExpr) -> TautExpr:
    """Canonical form: expansion followed by genus-0 tail reduction.

    The reduction rewrites psi classes on genus-0 vertices through the
    rational-tail comparison and normalizes genus-0 tree factors modulo the
    exact intersection pairing of the factor (see the reduction section),
    so that expressions equal as classes through genus-0 tail relations get
    literally equal canonical forms.
    """
    out = _reduce_expr(_normalize_core(e))
    out._canonical = True
    return out


def multiply(a: TautExpr, b: TautExpr) -> TautExpr:
    """Product in canonical form."""
    return normalize(_formal_product(a, b))


# ---------------------------------------------------------------------------
# genus-0 tail reduction
#
# Decorated graphs satisfy relations supported on genus-0 tails: psi on a
# genus-0 vertex equals a sum of splittings of that vertex (the rational
# tail comparison relative to any two other special points), and trees of
# genus-0 vertices satisfy the relations of the factor's Chow group.  The
# reduction pass rewrites every genus-0 psi through the comparison and then
# rewrites genus-0 trees into a fixed basis.  The factor relations are
# computed exactly: on genus-zero moduli the boundary strata span the Chow
# ring and the intersection pairing is perfect, so the nullspace of the
# pairing against complementary boundary monomials is exactly the space of
# relations.


def _g0_psi_target(s: DecoratedStratum):
    decorated = {vi for vi, _ in s.decorations}
    for vi, v in enumerate(s.graph.vertices):
        if v.genus != 0 or vi in decorated:
            continue
        for x in sorted(v.legs, key=str) + sorted(v.half):
            if s.psi.get(x, 0) >= 1:
                return vi, x
    return None


def _eliminate_g0_psi(s: DecoratedStratum):
    """Rewrite one psi power on a genus-0 vertex into vertex splittings."""
    target = _g0_psi_target(s)
    if target is None:
        return None
    vi, x = target
    g = s.graph
    v = g.vertices[vi]
    marks = sorted(v.legs, key=str) + sorted(v.half)
    others = [m for m in marks if m != x]
    if len(others) < 2:  # pragma: no cover - stability gives valence >= 3
        return []
    y, z = others[0], others[1]
    n1, n2 = g.fresh_half_ids(2)
    pool = [m for m in marks if m not in (x, y, z)]
    out = []
    for r in range(len(pool) + 1):
        for combo in itertools.combinations(pool, r):
            t_side = set(combo) | {x}
            b_side = set(marks) - t_side
            if len(t_side) + 1 < 3 or len(b_side) + 1 < 3:
                continue
            va = Vertex(
                0,
                frozenset(m for m in t_side if isinstance(m, str)),
                frozenset(m for m in t_side if isinstance(m, int)) | {n1},
            )
            vb = Vertex(
                0,
                frozenset(m for m in b_side if isinstance(m, str)),
                frozenset(m for m in b_side if isinstance(m, int)) | {n2},
            )
            verts = list(g.vertices[:vi]) + [va, vb] + list(g.vertices[vi + 1:])
            decs = [(di + 1 if di > vi else di, name) for di, name in s.decorations]
            psi = dict(s.psi)
            if psi[x] == 1:
                del psi[x]
            else:
                psi[x] -= 1
            graph = StableGraph(g.space, verts, set(g.edges) | {frozenset({n1, n2})})
            s2 = DecoratedStratum(graph, psi, decs)
            if s2.is_zero_class():
                continue
            out.append((Fraction(s2.aut_order, s.aut_order), s2))
    return out


_FACTOR_CACHE: dict = {}


def _abstract_space(m: int) -> MarkedSpace:
    return MarkedSpace(0, tuple(f"x{i:02d}" for i in range(m)))


def _factor_strata(m: int, k: int) -> list:
    sp = _abstract_space(m)
    base = DecoratedStratum(trivial_graph(sp))
    level = {base.canonical_key: base}
    for _ in range(k):
        nxt: dict = {}
        for s in level.values():
            for deg in one_edge_degenerations(s):
                c = deg.stratum.canonical_form()
                nxt[c.canonical_key] = c
        level = nxt
    return [level[key] for key in sorted(level, key=repr)]


def _nullspace(rows: list) -> list:
    """Kernel of c -> c . P for an exact rational matrix given by rows."""
    n = len(rows)
    if n == 0:
        return []
    width = len(rows[0])
    mat = [[rows[i][j] for i in range(n)] for j in range(width)]
    pivots = []
    r = 0
    for col in range(n):
        sel = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if sel is None:
            continue
        mat[r], mat[sel] = mat[sel], mat[r]
        inv = mat[r][col]
        mat[r] = [x / inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            vec[pc] = -mat[ri][fc]
        basis.append(vec)
    return basis


def _elimination_rules(kernel: list) -> dict:
    """Row-reduce the relation space; pivot index -> substitution combo."""
    if not kernel:
        return {}
    rows = [list(v) for v in kernel]
    n = len(rows[0])
    r = 0
    for col in range(n):
        sel = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        inv = rows[r][col]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    rules = {}
    for row in rows[:r]:
        p = next(i for i, x in enumerate(row) if x != 0)
        rules[p] = [(-row[q], q) for q in range(p + 1, n) if row[q] != 0]
    return rules


def _g0_reduction_table(m: int, k: int):
    cached = _FACTOR_CACHE.get((m, k))
    if cached is not None:
        return cached
    sp = _abstract_space(m)
    strata = _factor_strata(m, k)
    r = (m - 3) - k
    divisors = sorted(enumerate_boundary_divisors(sp), key=str)
    tests = list(itertools.combinations_with_replacement(divisors, max(r, 0)))
    rows = []
    for s in strata:
        row = []
        for combo in tests:
            mono = Monomial.make(strata=(s,) + tuple(combo))
            row.append(integrate(TautExpr(sp, {mono: Fraction(1)})))
        rows.append(row)
    rules = _elimination_rules(_nullspace(rows))
    table = {}
    for i, s in enumerate(strata):
        table[s.canonical_key] = (
            None if i not in rules else [(c, strata[j]) for c, j in rules[i]]
        )
    out = (strata, table)
    _FACTOR_CACHE[(m, k)] = out
    return out


def _g0_components(s: DecoratedStratum):
    """Maximal genus-0 subtrees joined by internal edges, with their data."""
    g = s.graph
    owner = {h: vi for vi, v in enumerate(g.vertices) for h in v.half}
    g0 = {vi for vi, v in enumerate(g.vertices) if v.genus == 0}
    internal = []
    parent = {vi: vi for vi in g0}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in g.edges:
        a, b = tuple(e)
        va, vb = owner[a], owner[b]
        if va in g0 and vb in g0:
            internal.append(e)
            parent[find(va)] = find(vb)
    comps: dict = {}
    for e in internal:
        a, _ = tuple(e)
        comps.setdefault(find(owner[a]), []).append(e)
    out = []
    for root, edges in comps.items():
        verts = sorted(vi for vi in g0 if find(vi) == root)
        out.append((verts, edges))
    return out


def _component_tree(s: DecoratedStratum, verts: list, edges: list):
    """Abstract factor tree of one genus-0 component, or None when skipped."""
    g = s.graph
    if len(edges) != len(verts) - 1:
        return None  # cycle: not a rational tree, leave untouched
    if any(vi in set(verts) for vi, _ in s.decorations):
        return None
    internal_he = {h for e in edges for h in e}
    fat_legs = sorted({l for vi in verts for l in g.vertices[vi].legs})
    fat_out = sorted({h for vi in verts for h in g.vertices[vi].half} - internal_he)
    marks = list(fat_legs) + list(fat_out)
    m = len(marks)
    abstract = {mk: f"x{i:02d}" for i, mk in enumerate(marks)}
    averts = []
    for vi in verts:
        v = g.vertices[vi]
        legs = {abstract[l] for l in v.legs} | {abstract[h] for h in v.half if h not in internal_he}
        half = {h for h in v.half if h in internal_he}
        averts.append(Vertex(0, frozenset(legs), frozenset(half)))
    asp = _abstract_space(m)
    tree = DecoratedStratum(StableGraph(asp, averts, edges))
    inverse = {al: mk for mk, al in abstract.items()}
    return tree, inverse, m


def _rebuild_component(s: DecoratedStratum, verts: list, edges: list, inverse: dict,
                       factor: DecoratedStratum) -> DecoratedStratum:
    """Replace one genus-0 component of the stratum by another factor tree."""
    g = s.graph
    comp = set(verts)
    keep = [(vi, v) for vi, v in enumerate(g.vertices) if vi not in comp]
    index_map = {vi: i for i, (vi, _) in enumerate(keep)}
    new_verts = [v for _, v in keep]
    top = max((h for v in g.vertices for h in v.half), default=-1) + 1
    fresh = {}
    for fv in factor.graph.vertices:
        legs = set()
        half = set()
        for al in fv.legs:
            mk = inverse[al]
            if isinstance(mk, str):
                legs.add(mk)
            else:
                half.add(mk)
        for fh in fv.half:
            if fh not in fresh:
                fresh[fh] = top
                top += 1
            half.add(fresh[fh])
        new_verts.append(Vertex(0, frozenset(legs), frozenset(half)))
    new_edges = [e for e in g.edges if e not in set(edges)]
    for e in factor.graph.edges:
        a, b = tuple(e)
        new_edges.append(frozenset({fresh[a], fresh[b]}))
    decs = [(index_map[vi], name) for vi, name in s.decorations]
    graph = StableGraph(g.space, new_verts, new_edges)
    return DecoratedStratum(graph, s.psi, decs)


def _rewrite_g0_tree(s: DecoratedStratum):
    """One rewriting step of a non-basis genus-0 tree component, if any."""
    for verts, edges in _g0_components(s):
        data = _component_tree(s, verts, edges)
        if data is None:
            continue
        tree, inverse, m = data
        _, table = _g0_reduction_table(m, len(edges))
        combo = table.get(tree.canonical_key)
        if combo is None:
            continue
        out = []
        for c, basis_tree in combo:
            s2 = _rebuild_component(s, verts, edges, inverse, basis_tree)
            if s2.is_zero_class():
                continue
            out.append((c * Fraction(s2.aut_order, s.aut_order), s2))
        return out
    return None


def _reduce_expr(e: TautExpr) -> TautExpr:
    acc: dict[Monomial, Fraction] = {}
    work = [(c, m) for m, c in e.terms.items()]
    while work:
        coeff, mono = work.pop()
        if not mono.strata:
            acc[mono] = acc.get(mono, Fraction(0)) + coeff
            continue
        s = mono.strata[0]
        elim = _eliminate_g0_psi(s)
        if elim is not None:
            for c2, s2 in elim:
                work.append((coeff * c2, _stratum_monomial(mono.kappa, s2.canonical_form())))
            continue
        rw = _rewrite_g0_tree(s)
        if rw is None:
            acc[mono] = acc.get(mono, Fraction(0)) + coeff
            continue
        for c2, s2 in rw:
            work.append((coeff * c2, _stratum_monomial(mono.kappa, s2.canonical_form())))
    return TautExpr(e.space, acc)


# ---------------------------------------------------------------------------
# pullback along a forgetful map


def _pullback_stratum_terms(big: MarkedSpace, s: DecoratedStratum, new_label: str) -> TautExpr:
    """Placements of the new leg on each vertex, with rational-tail corrections
    for each psi-decorated mark of that vertex."""
    out = zero(big)
    aut0 = s.aut_order
    g = s.graph
    for vi, v in enumerate(g.vertices):
        verts = list(g.vertices)
        verts[vi] = Vertex(v.genus, v.legs | {new_label}, v.half)
        placed = DecoratedStratum(
            StableGraph(big, verts, g.edges), s.psi, s.decorations
        )
        coeff = Fraction(placed.aut_order, aut0)
        out = out + coeff * TautExpr(big, {Monomial.make(strata=(placed,)): Fraction(1)})
        for x in sorted(v.legs | v.half, key=repr):
            e_x = s.psi.get(x, 0)
            if e_x < 1:
                continue
            t1, t2 = g.fresh_half_ids(2)
            verts = list(g.vertices)
            if isinstance(x, str):
                verts[vi] = Vertex(v.genus, (v.legs - {x}), v.half | {t2})
                tail = Vertex(0, frozenset({x, new_label}), frozenset({t1}))
            else:
                verts[vi] = Vertex(v.genus, v.legs, (v.half - {x}) | {t2})
                tail = Vertex(0, frozenset({new_label}), frozenset({x, t1}))
            psi = dict(s.psi)
            del psi[x]
            if e_x - 1:
                psi[t2] = e_x - 1
            tailed = DecoratedStratum(
                StableGraph(big, verts + [tail], set(g.edges) | {frozenset({t1, t2})}),
                psi,
                s.decorations,
            )
            if tailed.is_zero_class():
                continue
            coeff = Fraction(-tailed.aut_order, aut0)
            out = out + coeff * TautExpr(big, {Monomial.make(strata=(tailed,)): Fraction(1)})
    return out


def _pullback_factor(big: MarkedSpace, sp: MarkedSpace, kind: str, payload, new_label: str) -> TautExpr:
    if kind == "psi":
        label, e = payload
        tail_div = separating_divisor(big, big.genus, frozenset(big.markings) - {label, new_label})
        # (psi - D)^e expanded formally; mixed and repeated D factors are
        # resolved by normalization (excess and zero-class pruning)
        out = zero(big)
        for k in range(e + 1):
            binom = Fraction(_binomial(e, k) * (-1) ** k)
            m = Monomial.make(psi={label: e - k}, strata=(tail_div,) * k)
            out = out + binom * TautExpr(big, {m: Fraction(1)})
        return out
    if kind == "omega":
        label, e = payload
        return TautExpr(big, {Monomial.make(omega={label: e}): Fraction(1)})
    if kind == "lambda":
        return TautExpr(big, {Monomial.make(lam=payload): Fraction(1)})
    if kind == "kappa":
        a = payload
        m1 = Monomial.make(kappa=(a,))
        m2 = Monomial.make(psi={new_label: a})
        return TautExpr(big, {m1: Fraction(1), m2: Fraction(-1)})
    if kind == "divisor":
        s = DecoratedStratum(divisor_to_graph(sp, payload))
        return _pullback_stratum_terms(big, s, new_label)
    if kind == "stratum":
        return _pullback_stratum_terms(big, payload, new_label)
    raise AssertionError(kind)


def _binomial(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def pullback_forget(e: TautExpr, new_label: str) -> TautExpr:
    """Pullback along the map forgetting a fresh marking ``new_label``."""
    big = e.space.add(new_label)
    out = zero(big)
    for mono, coeff in e.terms.items():
        acc = TautExpr(big, {Monomial(): coeff})
        factors = []
        for l, ex in mono.psi:
            factors.append(("psi", (l, ex)))
        for l, ex in mono.omega:
            factors.append(("omega", (l, ex)))
        if mono.lam:
            factors.append(("lambda", mono.lam))
        for a in mono.kappa:
            factors.append(("kappa", a))
        for f in mono.strata:
            if isinstance(f, DivisorClassId):
                factors.append(("divisor", f))
            else:
                factors.append(("stratum", f))
        for kind, payload in factors:
            acc = _formal_product(acc, _pullback_factor(big, e.space, kind, payload, new_label))
        out = out + acc
    return out


# ---------------------------------------------------------------------------
# pushforward along a forgetful map


def _kappa_subsets(kappa: tuple):
    """All ways to convert a subset of the kappa factors into psi powers."""
    n = len(kappa)
    for mask in range(1 << n):
        taken = tuple(kappa[i] for i in range(n) if mask >> i & 1)
        kept = tuple(kappa[i] for i in range(n) if not mask >> i & 1)
        yield sum(taken), kept


def _push_smooth(target: MarkedSpace, mono: Monomial, label: str):
    psi = mono.psi_dict()
    a = psi.pop(label, 0)
    g = target.genus
    for extra, kept in _kappa_subsets(mono.kappa):
        total = a + extra
        if total >= 1:
            if total == 1:
                yield Fraction(2 * g - 2 + target.n), Monomial.make(psi=psi, kappa=kept)
            else:
                yield Fraction(1), Monomial.make(psi=psi, kappa=kept + (total - 1,))
        elif not extra:
            for x, b in psi.items():
                if b >= 1:
                    reduced = dict(psi)
                    reduced[x] = b - 1
                    yield Fraction(1), Monomial.make(psi=reduced, kappa=kept)


def _contract_lost_vertex(s: DecoratedStratum, vi: int, label: str) -> DecoratedStratum:
    """Remove a genus-0 vertex that became unstable after dropping ``label``.

    The two remaining special points are either a leg and a half-edge (the
    leg slides onto the neighbour) or two half-edges (their two edges fuse).
    """
    g = s.graph
    v = g.vertices[vi]
    legs = v.legs - {label}
    half = sorted(v.half)
    psi = {k: e for k, e in s.psi.items() if e}

    def drop_vertex(verts):
        return [u for i, u in enumerate(verts) if i != vi]

    if len(legs) == 1 and len(half) == 1:
        (x,) = tuple(legs)
        h = half[0]
        hstar = g.partner(h)
        verts = list(g.vertices)
        ui = g.vertex_of_half(hstar)
        u = verts[ui]
        verts[ui] = Vertex(u.genus, u.legs | {x}, u.half - {hstar})
        edges = {e for e in g.edges if h not in e}
        if hstar in psi:
            psi[x] = psi.pop(hstar)
        new_space = g.space.forget(label)
        graph = StableGraph(new_space, drop_vertex(verts), edges)
    elif len(legs) == 0 and len(half) == 2:
        h1, h2 = half
        p1, p2 = g.partner(h1), g.partner(h2)
        verts = list(g.vertices)
        edges = {e for e in g.edges if h1 not in e and h2 not in e}
        edges.add(frozenset({p1, p2}))
        new_space = g.space.forget(label)
        graph = StableGraph(new_space, drop_vertex(verts), edges)
    else:  # pragma: no cover - excluded by stability of the original graph
        raise AssertionError("unexpected unstable vertex shape")

    decs = []
    for di, name in s.decorations:
        decs.append((di - 1 if di > vi else di, name))
    return DecoratedStratum(graph, psi, decs)


def _push_stratum(target: MarkedSpace, mono: Monomial, label: str):
    s = mono.strata[0]
    aut0 = s.aut_order
    g = s.graph
    vi = g.vertex_of_leg(label)
    v = g.vertices[vi]
    for extra, kept in _kappa_subsets(mono.kappa):
        s_t = s.with_extra_psi(label, extra) if extra else s
        if s_t.is_zero_class():
            continue
        a = s_t.psi.get(label, 0)
        stable_after = 2 * v.genus - 2 + (v.valence - 1) > 0
        outputs: list[tuple[Fraction, DecoratedStratum]] = []
        if stable_after:
            verts = list(g.vertices)
            verts[vi] = Vertex(v.genus, v.legs - {label}, v.half)
            small_graph = StableGraph(target, verts, g.edges)
            base_psi = {k: e for k, e in s_t.psi.items() if k != label}
            if a == 0:
                marks = (v.legs - {label}) | v.half
                for x in sorted(marks, key=repr):
                    if base_psi.get(x, 0) >= 1:
                        psi2 = dict(base_psi)
                        psi2[x] -= 1
                        outputs.append(
                            (Fraction(1), DecoratedStratum(small_graph, psi2, s_t.decorations))
                        )
            elif a == 1:
                factor = Fraction(2 * v.genus - 2 + v.valence - 1)
                outputs.append(
                    (factor, DecoratedStratum(small_graph, base_psi, s_t.decorations))
                )
            else:
                raise UnsupportedError(
                    "pushforward would need a kappa class on a stratum vertex"
                )
        else:
            # genus-0 vertex with three special points: psi there is zero,
            # so only the bare contraction survives
            if a == 0:
                outputs.append((Fraction(1), _contract_lost_vertex(s_t, vi, label)))
        for c, s2 in outputs:
            if s2.is_zero_class():
                continue
            yield c * Fraction(s2.aut_order, aut0), _stratum_monomial(kept, s2)


def pushforward_forget(e: TautExpr, label: str) -> TautExpr:
    """Exact pushforward along the map forgetting one marking."""
    e.space.require_label(label)
    target = e.space.forget(label)
    ce = _normalize_core(e)
    acc: dict[Monomial, Fraction] = {}
    for mono, coeff in ce.terms.items():
        gen = _push_stratum(target, mono, label) if mono.strata else _push_smooth(target, mono, label)
        for c, m in gen:
            acc[m] = acc.get(m, Fraction(0)) + coeff * c
    out = _reduce_expr(TautExpr(target, acc))
    out._canonical = True
    return out


# ---------------------------------------------------------------------------
# integration


def _fresh_label(sp: MarkedSpace) -> str:
    i = 0
    while f"_q{i}" in sp.markings:
        i += 1
    return f"_q{i}"


def _vertex_space(v: Vertex) -> tuple[MarkedSpace, dict]:
    names = {}
    labels = []
    for l in sorted(v.legs):
        names[l] = l
        labels.append(l)
    for h in sorted(v.half):
        names[h] = f"_e{h}"
        labels.append(f"_e{h}")
    return MarkedSpace(v.genus, tuple(labels)), names


def _integrate_stratum(sp: MarkedSpace, s: DecoratedStratum) -> Fraction:
    decorated = {vi for vi, _ in s.decorations}
    plain = Fraction(1)
    for vi, v in enumerate(s.graph.vertices):
        if vi in decorated:
            continue
        moment = [s.psi.get(l, 0) for l in sorted(v.legs)]
        moment += [s.psi.get(h, 0) for h in sorted(v.half)]
        plain *= wk(v.genus, moment)
        if plain == 0:
            return Fraction(0)
    for vi in sorted(decorated):
        v = s.graph.vertices[vi]
        names = [name for i, name in s.decorations if i == vi]
        factors = [decoration(name) for name in names]
        missing = [d for d in factors if d.expansion is None]
        if missing:
            raise UnresolvedDecorationError(
                f"decoration {missing[0].name!r} has no class expansion and the "
                "integral requires its value"
            )
        vsp, rename = _vertex_space(v)
        integrand = one(vsp)
        for d in factors:
            integrand = multiply(integrand, d.expansion(vsp))
        for key in sorted(v.legs | v.half, key=repr):
            ex = s.psi.get(key, 0)
            if ex:
                integrand = multiply(integrand, psi_expr(vsp, rename[key], ex))
        plain *= integrate(integrand)
    return plain * Fraction(1, s.aut_order)


def _integrate_monomial(sp: MarkedSpace, mono: Monomial) -> Fraction:
    if mono.kappa:
        a = mono.kappa[0]
        rest = Monomial.make(psi=mono.psi_dict(), kappa=mono.kappa[1:], strata=mono.strata)
        fresh = _fresh_label(sp)
        big = pullback_forget(TautExpr(sp, {rest: Fraction(1)}), fresh)
        integrand = _formal_product(psi_expr(big.space, fresh, a + 1), big)
        return integrate(integrand)
    if mono.strata:
        return _integrate_stratum(sp, mono.strata[0])
    psi = mono.psi_dict()
    moment = [psi.get(l, 0) for l in sp.markings]
    return wk(sp.genus, moment)


def integrate(e: TautExpr) -> Fraction:
    """Exact degree of a top-degree expression; non-top terms are an error.

    Integration is representation independent, so only the expansion pass is
    needed here (the genus-0 reduction rewrites classes into equal classes).
    """
    ce = _normalize_core(e)
    dim = ce.space.dimension()
    total = Fraction(0)
    for mono, coeff in ce.terms.items():
        if mono.codim(ce.space) != dim:
            raise DegreeError(
                f"integrand term of codimension {mono.codim(ce.space)} on a "
                f"{dim}-dimensional space"
            )
        total += coeff * _integrate_monomial(ce.space, mono)
    return total


# ---------------------------------------------------------------------------
# serialization


def _rat_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def expr_to_json_dict(e: TautExpr) -> dict:
    terms = []
    for mono, coeff in sorted(e.terms.items(), key=lambda kv: str(kv[0])):
        strata = []
        for f in mono.strata:
            if isinstance(f, DivisorClassId):
                strata.append(
                    {"type": "divisor", "kind": f.kind, "h": f.h, "side": sorted(f.side)}
                )
            else:
                strata.append({"type": "stratum", **stratum_to_json_dict(f)})
        terms.append(
            {
                "coefficient": _rat_str(coeff),
                "psi": {l: ex for l, ex in mono.psi},
                "omega": {l: ex for l, ex in mono.omega},
                "lambda": mono.lam,
                "kappa": list(mono.kappa),
                "strata": strata,
            }
        )
    return {
        "space": {"genus": e.space.genus, "markings": list(e.space.markings)},
        "terms": terms,
    }


def expr_to_json(e: TautExpr) -> str:
    return json.dumps(expr_to_json_dict(e), sort_keys=True)


def expr_from_json_dict(data: dict) -> TautExpr:
    sp = MarkedSpace(data["space"]["genus"], tuple(data["space"]["markings"]))
    terms: dict[Monomial, Fraction] = {}
    for t in data["terms"]:
        strata: list[StratumFactor] = []
        for f in t.get("strata", []):
            if f["type"] == "divisor":
                if f["kind"] == "irr":
                    strata.append(irreducible_divisor(sp))
                else:
                    strata.append(separating_divisor(sp, f["h"], frozenset(f["side"])))
            else:
                gd = f["graph"]
                verts = [
                    Vertex(v["genus"], frozenset(v["legs"]), frozenset(v["half_edges"]))
                    for v in gd["vertices"]
                ]
                edges = [frozenset(e) for e in gd["edges"]]
                graph = StableGraph(sp, verts, edges)
                psi: dict = dict(f.get("psi_legs", {}))
                for k, ex in f.get("psi_half_edges", {}).items():
                    psi[int(k)] = ex
                decs = [(vi, name) for vi, name in f.get("decorations", [])]
                strata.append(DecoratedStratum(graph, psi, decs))
        mono = Monomial.make(
            psi=t.get("psi", {}),
            omega=t.get("omega", {}),
            lam=t.get("lambda", 0),
            kappa=t.get("kappa", ()),
            strata=strata,
        )
        coeff = Fraction(t["coefficient"])
        terms[mono] = terms.get(mono, Fraction(0)) + coeff
    return TautExpr(sp, terms)
