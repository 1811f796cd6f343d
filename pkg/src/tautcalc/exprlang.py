"""The CLI expression language: grammar, parser and printer.

Grammar (whitespace free between tokens):

    expr     := term (('+'|'-') term)*
    term     := rational ('*' factor)* | factor ('*' factor)*
    factor   := 'psi[L]' pow? | 'omega[L]' pow? | 'lambda' | 'kappa[a]' pow?
              | 'd_irr' | 'd[h;L1,...]' | 'W[L1,...]' | 'gamma[L1,...]'
              | 'H(l,m,n)' | '(' expr ')'
    pow      := '^' uint
    rational := int ('/' uint)?

``d[h;...]`` lists the markings on the genus-h side (empty for ``d[h;]``),
``W[...]`` the markings on the rational side of the Weierstrass-node
stratum, ``gamma[...]`` the markings on the genus-1 side of the two-bridge
stratum, and ``H(l,m,n)`` resolves through the hyperelliptic registry.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ExprParseError, UnsupportedError
from .expressions import (
    Monomial,
    TautExpr,
    _formal_product,
    divisor_expr,
    kappa_expr,
    lambda_expr,
    omega_expr,
    one,
    psi_expr,
    stratum_expr,
)
from .graphs import (
    WEIERSTRASS_NODE,
    DecoratedStratum,
    DivisorClassId,
    banana_stratum,
    irreducible_divisor,
    separating_divisor,
)
from .spaces import MarkedSpace


def format_rational(c: Fraction) -> str:
    """Lowest terms, 'p' or 'p/q'."""
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.eat(token):
            raise ExprParseError(f"expected {token!r}", self.pos)

    def uint(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ExprParseError("expected an unsigned integer", start)
        return int(self.text[start:self.pos])

    def int_(self) -> int:
        self.skip_ws()
        sign = -1 if self.eat("-") else 1
        if sign == 1:
            self.eat("+")
        return sign * self.uint()

    def label(self, stop: str) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in stop \
                and not self.text[self.pos].isspace():
            self.pos += 1
        if self.pos == start:
            raise ExprParseError("expected a marking label", start)
        return self.text[start:self.pos]

    def label_list(self, close: str = "]") -> list:
        labels = []
        if self.peek() == close:
            self.expect(close)
            return labels
        while True:
            labels.append(self.label(",;]" if close == "]" else ",)"))
            if self.eat(","):
                continue
            self.expect(close)
            return labels

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


class ExpressionParser:
    def __init__(self, space: MarkedSpace):
        self.space = space

    def parse(self, text: str) -> TautExpr:
        if not text or text.isspace():
            raise ExprParseError("empty expression", 0)
        sc = _Scanner(text)
        expr = self._term(sc)
        while True:
            if sc.eat("+"):
                expr = expr + self._term(sc)
            elif sc.eat("-"):
                expr = expr - self._term(sc)
            elif sc.at_end():
                return expr
            else:
                raise ExprParseError("expected '+', '-' or end of input", sc.pos)

    def _term(self, sc: _Scanner) -> TautExpr:
        ch = sc.peek()
        if ch.isdigit() or ch in "+-":
            coeff = self._rational(sc)
            acc = coeff * one(self.space)
            while sc.eat("*"):
                acc = _formal_product(acc, self._factor(sc))
            return acc
        acc = self._factor(sc)
        while sc.eat("*"):
            acc = _formal_product(acc, self._factor(sc))
        return acc

    def _rational(self, sc: _Scanner) -> Fraction:
        num = sc.int_()
        if sc.eat("/"):
            den = sc.uint()
            if den == 0:
                raise ExprParseError("zero denominator", sc.pos)
            return Fraction(num, den)
        return Fraction(num)

    def _power(self, sc: _Scanner) -> int:
        if sc.eat("^"):
            return sc.uint()
        return 1

    def _marking(self, sc: _Scanner, stop: str) -> str:
        pos = sc.pos
        label = sc.label(stop)
        if label not in self.space.markings:
            raise ExprParseError(
                f"unknown label {label!r} (markings: {','.join(self.space.markings)})", pos
            )
        return label

    def _marking_list(self, sc: _Scanner, close: str = "]") -> list:
        pos = sc.pos
        labels = sc.label_list(close)
        for label in labels:
            if label not in self.space.markings:
                raise ExprParseError(
                    f"unknown label {label!r} (markings: {','.join(self.space.markings)})", pos
                )
        if len(set(labels)) != len(labels):
            raise ExprParseError("repeated label", pos)
        return labels

    def _factor(self, sc: _Scanner) -> TautExpr:
        sp = self.space
        if sc.eat("psi["):
            label = self._marking(sc, ",;]")
            sc.expect("]")
            return psi_expr(sp, label, self._power(sc))
        if sc.eat("omega["):
            label = self._marking(sc, ",;]")
            sc.expect("]")
            return omega_expr(sp, label, self._power(sc))
        if sc.eat("lambda"):
            return lambda_expr(sp)
        if sc.eat("kappa["):
            pos = sc.pos
            a = sc.uint()
            sc.expect("]")
            if a < 1:
                raise ExprParseError("kappa index must be positive", pos)
            power = self._power(sc)
            acc = one(sp)
            for _ in range(power):
                acc = _formal_product(acc, kappa_expr(sp, a))
            return acc
        if sc.eat("d_irr"):
            return divisor_expr(sp, irreducible_divisor(sp))
        if sc.eat("d["):
            h = sc.uint()
            sc.expect(";")
            side = self._marking_list(sc)
            return divisor_expr(sp, separating_divisor(sp, h, frozenset(side)))
        if sc.eat("W["):
            side = self._marking_list(sc)
            from .hyperelliptic import weierstrass_node_stratum

            return stratum_expr(sp, weierstrass_node_stratum(sp, side))
        if sc.eat("gamma["):
            side = self._marking_list(sc)
            return stratum_expr(sp, banana_stratum(sp, side))
        if sc.eat("H("):
            pos = sc.pos
            ell = sc.uint()
            sc.expect(",")
            m = sc.uint()
            sc.expect(",")
            n = sc.uint()
            sc.expect(")")
            return self._resolve_registry(ell, m, n, pos)
        if sc.eat("("):
            inner = self.parse_sub(sc)
            sc.expect(")")
            return inner
        raise ExprParseError("expected a factor", sc.pos)

    def parse_sub(self, sc: _Scanner) -> TautExpr:
        expr = self._term(sc)
        while True:
            if sc.eat("+"):
                expr = expr + self._term(sc)
            elif sc.eat("-"):
                expr = expr - self._term(sc)
            else:
                return expr

    def _resolve_registry(self, ell: int, m: int, n: int, pos: int) -> TautExpr:
        from .errors import SpaceError
        from .hyperelliptic import HypClassId, NoGeneratorFormulaError, class_of

        try:
            id_ = HypClassId(ell, m, n, genus=self.space.genus)
            expr = class_of(id_)
        except (NoGeneratorFormulaError, SpaceError) as exc:
            raise ExprParseError(f"H({ell},{m},{n}): {exc}", pos) from exc
        if set(expr.space.markings) != set(self.space.markings):
            raise ExprParseError(
                f"H({ell},{m},{n}) lives on markings "
                f"{','.join(expr.space.markings)}, not {','.join(self.space.markings)}",
                pos,
            )
        if expr.space.markings == self.space.markings:
            return expr
        return TautExpr(self.space, expr.terms)


def parse_expression(space: MarkedSpace, text: str) -> TautExpr:
    """Parse grammar text into a raw expression on the space."""
    return ExpressionParser(space).parse(text)


# ---------------------------------------------------------------------------
# printing


def _stratum_factors(s: DecoratedStratum):
    """Grammar factors for a stratum, or None when not grammar-printable."""
    if any(isinstance(k, int) for k in s.psi):
        return None
    psi_part = dict(s.psi)
    g = s.graph
    decs = {name for _, name in s.decorations}
    if g.n_edges == 1 and len(g.vertices) == 1 and not decs:
        return psi_part, "d_irr"
    if g.n_edges == 1 and len(g.vertices) == 2:
        v0, v1 = g.vertices
        if not decs:
            div = separating_divisor(g.space, v0.genus, v0.legs)
            side = ",".join(sorted(div.side))
            return psi_part, f"d[{div.h};{side}]"
        if decs == {WEIERSTRASS_NODE} and len(s.decorations) == 1:
            (vi, _), = tuple(s.decorations)
            if g.vertices[vi].genus == 2 and g.vertices[1 - vi].genus == 0:
                rational = ",".join(sorted(g.vertices[1 - vi].legs))
                return psi_part, f"W[{rational}]"
        return None
    if g.n_edges == 2 and len(g.vertices) == 2 and not decs:
        genera = sorted(v.genus for v in g.vertices)
        if genera == [0, 1] and all(len(v.half) == 2 for v in g.vertices):
            v1 = next(v for v in g.vertices if v.genus == 1)
            return psi_part, f"gamma[{','.join(sorted(v1.legs))}]"
    return None


def _monomial_factors(mono: Monomial):
    factors = []
    psi = mono.psi_dict()
    for f in mono.strata:
        if isinstance(f, DivisorClassId):
            factors.append(str(f))
        else:
            parts = _stratum_factors(f)
            if parts is None:
                raise UnsupportedError(
                    "expression contains a stratum outside the grammar "
                    "(use the JSON output mode)"
                )
            extra_psi, token = parts
            for l, e in extra_psi.items():
                psi[l] = psi.get(l, 0) + e
            factors.append(token)
    head = []
    for l, e in sorted(psi.items()):
        head.append(f"psi[{l}]" + (f"^{e}" if e > 1 else ""))
    for l, e in mono.omega:
        head.append(f"omega[{l}]" + (f"^{e}" if e > 1 else ""))
    head.extend(["lambda"] * mono.lam)
    kappa_counts: dict[int, int] = {}
    for a in mono.kappa:
        kappa_counts[a] = kappa_counts.get(a, 0) + 1
    for a, c in sorted(kappa_counts.items()):
        head.append(f"kappa[{a}]" + (f"^{c}" if c > 1 else ""))
    return head + factors


def format_expression(e: TautExpr) -> str:
    """Render an expression in the grammar; parse(format(e)) recovers e."""
    if not e.terms:
        return "0"
    bits = []
    items = sorted(e.terms.items(), key=lambda kv: str(kv[0]))
    for i, (mono, coeff) in enumerate(items):
        factors = _monomial_factors(mono)
        mag = abs(coeff)
        body = "*".join(factors) if factors else ""
        if not factors:
            chunk = format_rational(mag)
        elif mag == 1:
            chunk = body
        else:
            chunk = f"{format_rational(mag)}*{body}"
        if i == 0:
            if coeff < 0:
                chunk = (f"-{format_rational(mag)}*{body}" if factors
                         else f"-{format_rational(mag)}")
            bits.append(chunk)
        else:
            bits.append(("- " if coeff < 0 else "+ ") + chunk)
    return " ".join(bits)
