import math

import numpy as np
import pytest

from ifsdim import Subshift, stopping_family
from ifsdim.errors import BudgetExceededError, NonContractivePotentialError

GOLDEN_TRANSFER = [[1, 1], [1, 0]]


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def transfer_power_count(a, n):
    """Word-count oracle: sum of the entries of A^(n-1), exact integers."""
    a = [[int(x) for x in row] for row in a]
    size = len(a)
    acc = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    for _ in range(n - 1):
        acc = [
            [sum(acc[i][k] * a[k][j] for k in range(size)) for j in range(size)]
            for i in range(size)
        ]
    return sum(sum(row) for row in acc)


class TestWords:
    def test_full_shift_counts(self):
        x = Subshift.full(2)
        assert len(list(x.words(3))) == 8
        assert x.word_count(3) == 8

    def test_golden_mean_length_two(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        assert set(x.words(2)) == {(0, 0), (0, 1), (1, 0)}

    def test_golden_mean_fibonacci(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        # |X_n*| = F(n+2) for the golden-mean shift
        for n in range(1, 12):
            assert x.word_count(n) == fib(n + 2)
        assert len(list(x.words(5))) == fib(7) == 13

    def test_lexicographic_order(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        ws = list(x.words(4))
        assert ws == sorted(ws)
        arr = x.words_array(4)
        assert [tuple(r) for r in arr] == ws

    def test_counts_match_transfer_power(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            ell = int(rng.integers(2, 5))
            while True:
                a = (rng.random((ell, ell)) < 0.6).astype(int)
                if a.sum(axis=0).all() and a.sum(axis=1).all():
                    break
            x = Subshift.sft(a)
            for n in (1, 2, 5, 9):
                assert x.word_count(n) == transfer_power_count(a, n)
                assert len(list(x.words(n))) == x.word_count(n)

    def test_admissibility(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        assert x.is_admissible((0, 1, 0, 0))
        assert not x.is_admissible((1, 1))
        assert not x.is_admissible((0, 2))

    def test_validation(self):
        with pytest.raises(ValueError):
            Subshift.sft([[1, 0], [1, 0]])  # all-zero column
        with pytest.raises(ValueError):
            Subshift.sft([[0, 0], [1, 1]])  # all-zero row
        with pytest.raises(ValueError):
            Subshift.sft([[2, 1], [1, 1]])

    def test_budget_guard(self):
        x = Subshift.full(4)
        with pytest.raises(BudgetExceededError):
            x.words_array(10, budget=1000)


class TestBlockShift:
    def test_full_shift_blocks(self):
        x = Subshift.full(2)
        b = x.block_shift(3)
        assert b.is_full and b.ell == 8
        assert b.word_for_symbol(0) == (0, 0, 0)
        assert b.word_for_symbol(5) == (1, 0, 1)
        assert b.symbol_for_word((1, 0, 1)) == 5

    def test_golden_mean_blocks(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        b = x.block_shift(2)
        assert b.is_full and b.ell == 3
        words = [b.word_for_symbol(j) for j in range(3)]
        assert words == [(0, 0), (0, 1), (1, 0)]
        for j, w in enumerate(words):
            assert b.symbol_for_word(w) == j

    def test_block_length_one_is_identity_relabeling(self):
        x = Subshift.full(3)
        b = x.block_shift(1)
        assert b.ell == 3
        assert [b.word_for_symbol(j) for j in range(3)] == [(0,), (1,), (2,)]

    def test_lazy_ranking_round_trip_deep(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        b = x.block_shift(20)
        assert b.ell == fib(22)
        for j in (0, 1, 17711 // 2, fib(22) - 1):
            assert b.symbol_for_word(b.word_for_symbol(j)) == j


class TestStoppingFamily:
    def constant_sup(self, value):
        return lambda word: len(word) * value

    def test_full_shift_depth_three(self):
        # sup exp(S_n h) = 2^-n; 2^-3 < 0.2 <= 2^-2 stops at length 3
        x = Subshift.full(2)
        fam = stopping_family(x, self.constant_sup(math.log(0.5)), 0.2)
        assert len(fam) == 8
        assert fam.min_len == fam.max_len == 3

    def test_full_shift_depth_two(self):
        x = Subshift.full(2)
        fam = stopping_family(x, self.constant_sup(math.log(0.5)), 0.4)
        assert len(fam) == 4
        assert fam.min_len == fam.max_len == 2

    def test_golden_mean_family(self):
        x = Subshift.sft(GOLDEN_TRANSFER)
        fam = stopping_family(x, self.constant_sup(math.log(0.5)), 0.4)
        assert set(fam.words) == {(0, 0), (0, 1), (1, 0)}

    def test_partition_property(self):
        # every long admissible word has exactly one prefix in the family
        x = Subshift.sft(GOLDEN_TRANSFER)
        rng = np.random.default_rng(11)

        def sup(word):
            # symbol-dependent one-step potential
            vals = {0: math.log(0.4), 1: math.log(0.7)}
            return sum(vals[s] for s in word)

        fam = stopping_family(x, sup, 0.05)
        for _ in range(1000):
            word = [int(rng.integers(0, 2))]
            while len(word) < fam.max_len + 3:
                succ = x.successors(word[-1])
                word.append(int(succ[rng.integers(0, len(succ))]))
            assert fam.prefix_in_family(tuple(word))

    def test_depth_bounds_hold(self):
        x = Subshift.full(3)

        def sup(word):
            vals = {0: math.log(0.3), 1: math.log(0.5), 2: math.log(0.7)}
            return sum(vals[s] for s in word)

        for r in (0.2, 0.05, 0.01, 0.002):
            fam = stopping_family(x, sup, r)
            # coarse restatement of the depth pinch
            assert fam.min_len >= math.log(1.0 / r) / -math.log(0.3) - 1.0
            assert fam.max_len <= math.log(1.0 / r) / -math.log(0.7) + 1.0

    def test_non_contractive_rejected(self):
        x = Subshift.full(2)
        with pytest.raises(NonContractivePotentialError):
            stopping_family(x, lambda w: 0.0 if len(w) < 3 else -1.0, 0.1)

    def test_r_above_r0_rejected(self):
        x = Subshift.full(2)
        with pytest.raises(ValueError):
            stopping_family(x, self.constant_sup(math.log(0.5)), 0.9)
