"""End-to-end verification of every anchored computation.

Each check recomputes one of the published values or identities from
scratch through the engine and compares exactly.  The CLI ``verify``
subcommand and the acceptance test suite both run this list.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Iterable, Optional

from .expressions import (
    TautExpr,
    divisor_expr,
    integrate,
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
    divisor_to_graph,
    enumerate_boundary_divisors,
    irreducible_divisor,
    separating_divisor,
)
from .hyperelliptic import (
    HypClassId,
    class_of,
    verify_relations,
    weierstrass_node_stratum,
)
from .moving_curves import b_curve_pairing, conj_pair_family, pair, pair_termwise
from .psi_numbers import dilaton_check, string_check, wk
from .spaces import MarkedSpace


@dataclass
class CheckResult:
    name: str
    group: str
    expected: str
    computed: str
    ok: bool


def _result(name: str, group: str, expected, computed) -> CheckResult:
    return CheckResult(name, group, str(expected), str(computed), expected == computed)


# ---------------------------------------------------------------------------
# individual checks


def _check_logan_pairing() -> Iterable[CheckResult]:
    for n in range(4):
        family = conj_pair_family(n)
        cls = class_of(HypClassId(0, 1, n))
        yield _result(f"conjugate-pair family against the pair divisor, n={n}",
                      "logan", Fraction(-2), pair(family, cls))
    family = conj_pair_family(0)
    base = class_of(HypClassId(0, 1, 0))
    termwise = dict(pair_termwise(family, base))
    reported = [
        ("lambda term", "-1*lambda", Fraction(0)),
        ("psi[+] term", "psi[+]^1", Fraction(8)),
        ("psi[-] term", "psi[-]^1", Fraction(8)),
        ("pair-tail divisor term", "-3*d[2;]", Fraction(-18)),
        ("genus-one tail term", "-1*d[1;]", Fraction(0)),
    ]
    keys = {
        "-1*lambda": "lambda",
        "psi[+]^1": "psi[+]^1",
        "psi[-]^1": "psi[-]^1",
        "-3*d[2;]": "d[2;]",
        "-1*d[1;]": "d[1;]",
    }
    for human, shown, expected in reported:
        got = termwise[keys[shown]]
        yield _result(f"termwise value of the {human} ({shown})", "logan", expected, got)


def _check_weierstrass_pair_integral() -> Iterable[CheckResult]:
    for n in range(3):
        cls = class_of(HypClassId(2, 0, n))
        sp = cls.space
        value = integrate(multiply(cls, psi_expr(sp, "w1", n + 3)))
        yield _result(
            f"two-Weierstrass class against psi^{n + 3}, n={n}",
            "notprop", Fraction(1, 384), value,
        )


def _check_w_vanishing() -> Iterable[CheckResult]:
    for n in range(4):
        marks = ("w1", "w2") + tuple(f"p{i}" for i in range(1, n + 1))
        sp = MarkedSpace(2, marks)
        w = stratum_expr(sp, weierstrass_node_stratum(sp, ("w1", "w2")))
        value = integrate(multiply(w, psi_expr(sp, "w1", n + 3)))
        yield _result(
            f"Weierstrass-node stratum against psi^{n + 3}, n={n}",
            "notprop", Fraction(0), value,
        )


def _check_b_curve() -> Iterable[CheckResult]:
    for n in range(3):
        res = b_curve_pairing(n)
        yield _result(f"admissible-cover pairing, n={n} (up to a positive power of two)",
                      "bcurve", Fraction(-1, 8), res.value)
    for n in range(6):
        yield _result(f"admissible-cover pairing sign, n={n}", "bcurve",
                      -1, b_curve_pairing(n).sign)


def _omega_spaces():
    for g in (1, 2):
        for n in range(2, 5):
            yield MarkedSpace(g, tuple(f"p{i}" for i in range(1, n + 1)))


def _check_omega_dilaton() -> Iterable[CheckResult]:
    for sp in _omega_spaces():
        g = sp.genus
        ok = True
        for i in sp.markings:
            for j in sp.markings:
                pushed = pushforward_forget(omega_expr(sp, j), i)
                target = sp.forget(i)
                want = (2 * g - 2) * one(target) if i == j else zero(target)
                ok = ok and pushed == normalize(want)
        yield _result(
            f"stable-psi pushforward is (2g-2) or 0 on genus {g} with {sp.n} markings",
            "omega", True, ok,
        )


def _check_omega_swap() -> Iterable[CheckResult]:
    for n in range(2, 5):
        sp = MarkedSpace(2, tuple(f"p{i}" for i in range(1, n + 1)))
        ok = True
        for r in range(0, n - 1):
            for subset in itertools.combinations(sp.markings, r):
                div = divisor_expr(sp, separating_divisor(sp, 2, frozenset(subset)))
                rest = [m for m in sp.markings if m not in subset]
                forms = [multiply(omega_expr(sp, i), div) for i in rest]
                ok = ok and all(f == forms[0] for f in forms[1:])
        yield _result(
            f"omega swap against every genus-2 tail divisor, {n} markings",
            "omega", True, ok,
        )


def _check_pushforward_ladder() -> Iterable[CheckResult]:
    for check in verify_relations(max_n=2):
        yield CheckResult(check.name, "ladder", check.expected, check.computed, check.ok)


def _check_w_pullback() -> Iterable[CheckResult]:
    for n in range(1, 4):
        marks = ("w1", "w2") + tuple(f"p{i}" for i in range(1, n))
        sp = MarkedSpace(2, marks)
        big = sp.add(f"p{n}")
        lhs = normalize(
            pullback_forget(stratum_expr(sp, weierstrass_node_stratum(sp, ("w1", "w2"))), f"p{n}")
        )
        on_genus2 = normalize(stratum_expr(big, weierstrass_node_stratum(big, ("w1", "w2"))))
        on_rational = normalize(
            stratum_expr(big, weierstrass_node_stratum(big, ("w1", "w2", f"p{n}")))
        )
        yield _result(
            f"pullback of the node stratum splits by leg side, n={n}",
            "wpull", True, lhs - on_genus2 == on_rational,
        )


def _bounded_multisets(n: int, total: int, cap: Optional[int] = None):
    """Non-increasing n-tuples of non-negative integers with sum <= total."""
    if n == 0:
        yield ()
        return
    if cap is None:
        cap = total
    for first in range(min(cap, total), -1, -1):
        for rest in _bounded_multisets(n - 1, total - first, first):
            yield (first,) + rest


def _genus0_closed_form(alpha) -> Fraction:
    num = factorial(len(alpha) - 3)
    den = 1
    for a in alpha:
        den *= factorial(a)
    return Fraction(num, den)


def _check_engine_psi() -> Iterable[CheckResult]:
    ok = True
    for n in range(3, 9):
        d = n - 3
        for alpha in _bounded_multisets(n, d):
            if sum(alpha) == d and wk(0, alpha) != _genus0_closed_form(alpha):
                ok = False
    yield _result("genus-0 closed form matches the recursion up to 8 points",
                  "engine", True, ok)
    ok = True
    for g in (0, 1, 2):
        for n in range(0, 7):
            if 2 * g - 2 + n <= 0:
                continue
            top = 3 * g - 3 + n
            for alpha in _bounded_multisets(n, max(top, 0)):
                ok = ok and string_check(g, alpha) and dilaton_check(g, alpha)
    yield _result("string and dilaton identities, genus <= 2, up to 6 points",
                  "engine", True, ok)


def _check_engine_pushpull() -> Iterable[CheckResult]:
    sp = MarkedSpace(2, ("a", "b"))
    big = sp.add("q")
    a_classes = [
        psi_expr(sp, "a"),
        divisor_expr(sp, separating_divisor(sp, 1, frozenset({"a"}))),
        divisor_expr(sp, irreducible_divisor(sp)),
    ]
    big_classes = [
        multiply(psi_expr(big, "q", 3), psi_expr(big, "a", 2)),
        multiply(psi_expr(big, "b", 4), psi_expr(big, "q")),
        multiply(
            divisor_expr(big, separating_divisor(big, 2, frozenset())), psi_expr(big, "q", 4)
        ),
    ]
    ok = True
    for a_cls in a_classes:
        for e_big in big_classes:
            lhs = integrate(multiply(pullback_forget(a_cls, "q"), e_big))
            rhs = integrate(multiply(a_cls, pushforward_forget(e_big, "q")))
            ok = ok and lhs == rhs
    yield _result("projection formula across the forgetful map", "engine", True, ok)
    ok = True
    for a_cls in a_classes:
        ok = ok and pushforward_forget(pullback_forget(a_cls, "q"), "q").is_zero()
    yield _result("pushforward of a pullback vanishes (fibre dimension one)",
                  "engine", True, ok)


def _brute_force_divisors(sp: MarkedSpace) -> frozenset:
    """Independent enumeration through one-edge graphs up to isomorphism."""
    from .graphs import DecoratedStratum, StableGraph, Vertex

    found = {}
    marks = list(sp.markings)
    if sp.genus >= 1:
        v = Vertex(sp.genus - 1, frozenset(marks), frozenset({0, 1}))
        s = DecoratedStratum(StableGraph(sp, [v], [frozenset({0, 1})]))
        found[s.canonical_key] = irreducible_divisor(sp)
    for h in range(sp.genus + 1):
        for r in range(len(marks) + 1):
            for combo in itertools.combinations(marks, r):
                part = frozenset(combo)
                comp = frozenset(marks) - part
                if 2 * h - 2 + len(part) + 1 <= 0:
                    continue
                if 2 * (sp.genus - h) - 2 + len(comp) + 1 <= 0:
                    continue
                v0 = Vertex(h, part, frozenset({0}))
                v1 = Vertex(sp.genus - h, comp, frozenset({1}))
                s = DecoratedStratum(StableGraph(sp, [v0, v1], [frozenset({0, 1})]))
                if s.canonical_key not in found:
                    found[s.canonical_key] = separating_divisor(sp, h, part)
    return frozenset(found.values())


def _check_divisor_enumeration() -> Iterable[CheckResult]:
    ok = True
    for g in (0, 1, 2):
        for n in range(0, 6):
            if 2 * g - 2 + n <= 0:
                continue
            sp = MarkedSpace(g, tuple(f"p{i}" for i in range(1, n + 1)))
            if enumerate_boundary_divisors(sp) != _brute_force_divisors(sp):
                ok = False
    yield _result("boundary enumeration matches graph-isomorphism brute force",
                  "engine", True, ok)


def _random_expression_text(rng: random.Random, sp: MarkedSpace) -> str:
    factors = []
    for _ in range(rng.randint(1, 3)):
        kind = rng.choice(["psi", "psi", "lambda", "kappa", "divisor"])
        if kind == "psi":
            factors.append(f"psi[{rng.choice(sp.markings)}]^{rng.randint(1, 3)}")
        elif kind == "lambda":
            factors.append("lambda")
        elif kind == "kappa":
            factors.append(f"kappa[{rng.randint(1, 2)}]")
        else:
            divs = sorted(enumerate_boundary_divisors(sp), key=str)
            factors.append(str(rng.choice(divs)))
    num = rng.randint(-9, 9) or 1
    den = rng.randint(1, 9)
    terms = [f"{num}/{den}*" + "*".join(factors)]
    return " + ".join(terms)


def _check_parser_roundtrip() -> Iterable[CheckResult]:
    rng = random.Random(20260809)
    ok = True
    spaces = [
        MarkedSpace(2, ("+", "-")),
        MarkedSpace(2, ("w1", "w2", "p1")),
        MarkedSpace(1, ("a", "b", "c")),
        MarkedSpace(0, ("a", "b", "c", "d")),
    ]
    count = 0
    while count < 200:
        sp = rng.choice(spaces)
        text = _random_expression_text(rng, sp)
        parsed = parse_expression(sp, text)
        again = parse_expression(sp, format_expression(parsed))
        ok = ok and again == parsed
        count += 1
    yield _result("parse after print is the identity on a 200-expression corpus",
                  "engine", True, ok)
    ok = True
    for sp in spaces[:2]:
        for text in ("psi[%s]" % sp.markings[0], "lambda", "d_irr"):
            canon = normalize(parse_expression(sp, text))
            printed = format_expression(canon)
            ok = ok and normalize(parse_expression(sp, printed)) == canon
    yield _result("canonical divisor-degree forms survive print and parse",
                  "engine", True, ok)


# ---------------------------------------------------------------------------
# the registry of checks


_CHECK_GROUPS: list = [
    ("logan", _check_logan_pairing),
    ("notprop", _check_weierstrass_pair_integral),
    ("notprop", _check_w_vanishing),
    ("bcurve", _check_b_curve),
    ("omega", _check_omega_dilaton),
    ("omega", _check_omega_swap),
    ("ladder", _check_pushforward_ladder),
    ("wpull", _check_w_pullback),
    ("engine", _check_engine_psi),
    ("engine", _check_engine_pushpull),
    ("engine", _check_divisor_enumeration),
    ("engine", _check_parser_roundtrip),
]


def run_verification(only: Optional[str] = None) -> list:
    """Run all checks (or those whose group/name contains ``only``)."""
    results: list = []
    for group, fn in _CHECK_GROUPS:
        if only and only not in group:
            continue
        results.extend(fn())
    if only and not results:
        for group, fn in _CHECK_GROUPS:
            for res in fn():
                if only in res.name:
                    results.append(res)
    return results


def _short(text: str, width: int = 48) -> str:
    return text if len(text) <= width else text[: width - 3] + "..."


def report_lines(results: list) -> list:
    lines = []
    for res in results:
        mark = "ok" if res.ok else "FAIL"
        if res.ok and res.expected == res.computed:
            lines.append(f"[{mark:4s}] {res.name}: {_short(res.expected)}")
        else:
            lines.append(
                f"[{mark:4s}] {res.name}: expected {_short(res.expected)}, "
                f"computed {_short(res.computed)}"
            )
    return lines
