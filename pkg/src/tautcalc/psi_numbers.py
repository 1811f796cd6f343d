"""Exact psi-class intersection numbers <tau_{a_1}...tau_{a_n}>_g, g <= 2.

Every value is derived from the normalization <tau_0^3>_0 = 1 by the string
equation, the dilaton equation (whose Virasoro L_0 central term supplies the
one-point genus-one value), and the DVV recursion on the largest exponent:

  (2k+3)!! <tau_{k+1} X>_g =
      sum_j [(2(k+a_j)+1)!!/(2a_j-1)!!] <tau_{k+a_j} X/tau_{a_j}>_g
    + 1/2 sum_{a+b=k-1} (2a+1)!!(2b+1)!! ( <tau_a tau_b X>_{g-1}
          + sum_{g1+g2=g, S+T=X} <tau_a S>_{g1} <tau_b T>_{g2} ).

A correlator is zero unless its exponents sum to 3g - 3 + n; unstable
correlators are zero.  Results are memoized by (genus, sorted exponents);
the table size can be capped with the TAUTCALC_WK_MEMO_LIMIT environment
variable (further values are then computed without being stored, which does
not change any result).
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Iterable

from .errors import UnsupportedError

MEMO_ENV_VAR = "TAUTCALC_WK_MEMO_LIMIT"

_memo: dict[tuple[int, tuple[int, ...]], Fraction] = {}


def _memo_limit() -> int | None:
    raw = os.environ.get(MEMO_ENV_VAR)
    if raw is None:
        return None
    try:
        return max(0, int(raw))
    except ValueError:
        return None


def clear_memo() -> None:
    _memo.clear()


def memo_size() -> int:
    return len(_memo)


def double_factorial_odd(k: int) -> int:
    """(2k+1)!! for k >= -1, with (-1)!! = 1."""
    out = 1
    for i in range(1, k + 1):
        out *= 2 * i + 1
    return out if k >= 0 else 1


def wk(genus: int, exponents: Iterable[int]) -> Fraction:
    """The top intersection of psi powers on the moduli of stable curves.

    Zero on dimension mismatch and on unstable (g, n); genus above two is
    rejected (the recursion itself is general, the supported range is not).
    """
    exps = tuple(int(a) for a in exponents)
    if genus < 0 or any(a < 0 for a in exps):
        return Fraction(0)
    if genus > 2:
        raise UnsupportedError(f"genus {genus} psi intersections are not supported")
    return _wk(genus, tuple(sorted(exps, reverse=True)))


def _wk(g: int, exps: tuple[int, ...]) -> Fraction:
    n = len(exps)
    if 2 * g - 2 + n <= 0:
        return Fraction(0)
    if sum(exps) != 3 * g - 3 + n:
        return Fraction(0)
    if g == 0 and n == 3:
        return Fraction(1)
    key = (g, exps)
    cached = _memo.get(key)
    if cached is not None:
        return cached

    if exps[-1] == 0:
        # string equation: remove one tau_0, lower one exponent
        rest = exps[:-1]
        total = Fraction(0)
        for j, a in enumerate(rest):
            if a >= 1:
                reduced = tuple(sorted(rest[:j] + (a - 1,) + rest[j + 1:], reverse=True))
                total += _wk(g, reduced)
    elif exps[-1] == 1:
        # dilaton equation; the L_0 central term gives the (1,1) one-point value
        rest = exps[:-1]
        total = (2 * g - 2 + len(rest)) * _wk(g, rest)
        if g == 1 and not rest:
            total += Fraction(1, 24)
    else:
        total = _dvv(g, exps)

    limit = _memo_limit()
    if limit is None or len(_memo) < limit:
        _memo[key] = total
    return total


def _dvv(g: int, exps: tuple[int, ...]) -> Fraction:
    k = exps[0] - 1
    rest = exps[1:]
    total = Fraction(0)
    # transfer onto another insertion
    for j, a in enumerate(rest):
        weight = Fraction(double_factorial_odd(k + a), double_factorial_odd(a - 1))
        merged = tuple(sorted(rest[:j] + (k + a,) + rest[j + 1:], reverse=True))
        total += weight * _wk(g, merged)
    # boundary terms
    for a in range(k):
        b = k - 1 - a
        w = double_factorial_odd(a) * double_factorial_odd(b)
        if g >= 1:
            total += Fraction(w, 2) * _wk(g - 1, tuple(sorted((a, b) + rest, reverse=True)))
        for g1 in range(g + 1):
            g2 = g - g1
            for mask in range(1 << len(rest)):
                s = tuple(rest[i] for i in range(len(rest)) if mask >> i & 1)
                t = tuple(rest[i] for i in range(len(rest)) if not mask >> i & 1)
                left = _wk(g1, tuple(sorted((a,) + s, reverse=True)))
                if left:
                    right = _wk(g2, tuple(sorted((b,) + t, reverse=True)))
                    total += Fraction(w, 2) * left * right
    return total / double_factorial_odd(k + 1)


def string_check(genus: int, exponents: Iterable[int]) -> bool:
    """Verify the string equation <tau_0 prod tau_{a_i}> = sum of reductions."""
    exps = tuple(int(a) for a in exponents)
    if 2 * genus - 2 + len(exps) <= 0:
        raise UnsupportedError("string check needs a stable base correlator")
    lhs = wk(genus, exps + (0,))
    rhs = Fraction(0)
    for j, a in enumerate(exps):
        if a >= 1:
            rhs += wk(genus, exps[:j] + (a - 1,) + exps[j + 1:])
    return lhs == rhs


def dilaton_check(genus: int, exponents: Iterable[int]) -> bool:
    """Verify <tau_1 prod tau_{a_i}> = (2g - 2 + n) <prod tau_{a_i}>."""
    exps = tuple(int(a) for a in exponents)
    if 2 * genus - 2 + len(exps) <= 0:
        raise UnsupportedError("dilaton check needs a stable base correlator")
    lhs = wk(genus, exps + (1,))
    rhs = (2 * genus - 2 + len(exps)) * wk(genus, exps)
    return lhs == rhs
