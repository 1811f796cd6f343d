"""psi intersection numbers: seeds, recursion values, identities, memo cap."""

import itertools
import os
from fractions import Fraction
from math import factorial

import pytest

from tautcalc import UnsupportedError, dilaton_check, string_check, wk
from tautcalc.psi_numbers import MEMO_ENV_VAR, clear_memo, memo_size


def genus0_closed_form(alpha):
    """(n-3)! / prod a_i!, the independent genus-0 oracle."""
    num = factorial(len(alpha) - 3)
    den = 1
    for a in alpha:
        den *= factorial(a)
    return Fraction(num, den)


def exact_sum_multisets(n, total):
    if n == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in exact_sum_multisets(n - 1, total - first):
            if not rest or first >= rest[0]:
                yield (first,) + rest


class TestValues:
    def test_normalization(self):
        assert wk(0, (0, 0, 0)) == 1

    def test_genus_one_seed(self):
        assert wk(1, (1,)) == Fraction(1, 24)

    def test_string_consistency_value(self):
        assert wk(1, (2, 0)) == wk(1, (1,))

    def test_genus_two_one_point(self):
        assert wk(2, (4,)) == Fraction(1, 1152)

    @pytest.mark.parametrize(
        "exps,value",
        [
            ((5, 0), Fraction(1, 1152)),
            ((4, 1), Fraction(1, 384)),
            ((3, 2), Fraction(29, 5760)),
        ],
    )
    def test_genus_two_two_point(self, exps, value):
        assert wk(2, exps) == value

    def test_genus_one_small_table(self):
        assert wk(1, (1, 1)) == Fraction(1, 24)
        assert wk(1, (2, 1, 0)) == Fraction(1, 12)
        assert wk(1, (1, 1, 1)) == Fraction(1, 12)

    def test_dimension_gate(self):
        assert wk(2, (3,)) == 0
        assert wk(1, (2,)) == 0
        assert wk(0, (1, 0, 0)) == 0

    def test_four_dilaton_insertions(self):
        assert wk(1, (1, 1, 1, 1)) == Fraction(1, 4)

    def test_unstable_is_zero(self):
        assert wk(0, (0, 0)) == 0
        assert wk(1, ()) == 0

    def test_symmetry(self):
        assert wk(2, (1, 4)) == wk(2, (4, 1))
        assert wk(0, (0, 2, 0, 0, 0)) == wk(0, (0, 0, 0, 2, 0))

    def test_genus_gate(self):
        with pytest.raises(UnsupportedError):
            wk(3, (7,))


class TestGenusZeroOracle:
    def test_all_up_to_eight_points(self):
        for n in range(3, 9):
            d = n - 3
            for alpha in exact_sum_multisets(n, d):
                assert wk(0, alpha) == genus0_closed_form(alpha), alpha


class TestIdentities:
    def test_string_and_dilaton_sweep(self):
        for g in (0, 1, 2):
            for n in range(0, 7):
                if 2 * g - 2 + n <= 0:
                    continue
                top = 3 * g - 3 + n
                for total in range(top + 1):
                    for alpha in exact_sum_multisets(n, total):
                        assert string_check(g, alpha)
                        assert dilaton_check(g, alpha)

    def test_dilaton_on_genus_two(self):
        assert wk(2, (4, 1)) == 3 * wk(2, (4,))

    def test_checks_need_stable_input(self):
        with pytest.raises(UnsupportedError):
            string_check(1, ())


class TestMemo:
    def test_determinism_across_memo_states(self):
        clear_memo()
        first = wk(2, (2, 2, 1))
        again = wk(2, (2, 2, 1))
        clear_memo()
        fresh = wk(2, (2, 2, 1))
        assert first == again == fresh

    def test_memo_cap_env_var(self):
        clear_memo()
        old = os.environ.get(MEMO_ENV_VAR)
        try:
            os.environ[MEMO_ENV_VAR] = "2"
            value = wk(2, (3, 2, 1, 0))
            assert memo_size() <= 2
            os.environ[MEMO_ENV_VAR] = "100000"
            clear_memo()
            assert wk(2, (3, 2, 1, 0)) == value
        finally:
            if old is None:
                os.environ.pop(MEMO_ENV_VAR, None)
            else:
                os.environ[MEMO_ENV_VAR] = old
            clear_memo()
