"""One-sided symbolic dynamics: full shifts, subshifts of finite type,
block recodings, and stopping families.

Symbols are integers ``0 .. ell-1``.  A word is a tuple of symbols.  Word
enumeration is streaming and lexicographic so that partition sums can be
reduced in a canonical order.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceededError,
    InadmissibleWordError,
    NonContractivePotentialError,
)


class Subshift:
    """Full shift or subshift of finite type over ``{0, ..., ell-1}``.

    For an SFT, ``transfer[i, j] == 1`` allows symbol ``j`` to follow
    symbol ``i``.  The transfer matrix may not have an all-zero row or
    column: every symbol must extend in both directions.
    """

    def __init__(self, ell, transfer=None):
        ell = int(ell)
        if ell < 1:
            raise ValueError(f"alphabet size must be >= 1, got {ell}")
        self.ell = ell
        if transfer is None:
            self.transfer = None
            self._succ = None
        else:
            a = np.asarray(transfer)
            if a.shape != (ell, ell):
                raise ValueError(f"transfer matrix must be {ell}x{ell}, got {a.shape}")
            if not np.isin(a, (0, 1)).all():
                raise ValueError("transfer matrix entries must be 0 or 1")
            a = a.astype(np.int8)
            if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) == 0).any():
                raise ValueError("transfer matrix has an all-zero row or column")
            self.transfer = a
            self._succ = [np.flatnonzero(a[i]).astype(np.int64) for i in range(ell)]

    @classmethod
    def full(cls, ell):
        return cls(ell)

    @classmethod
    def sft(cls, transfer):
        transfer = np.asarray(transfer)
        return cls(transfer.shape[0], transfer)

    @property
    def is_full(self):
        return self.transfer is None

    def __repr__(self):
        kind = "full" if self.is_full else "sft"
        return f"Subshift({kind}, ell={self.ell})"

    def successors(self, symbol):
        if self.is_full:
            return np.arange(self.ell, dtype=np.int64)
        return self._succ[symbol]

    def is_admissible(self, word):
        for sym in word:
            if not 0 <= sym < self.ell:
                return False
        if self.is_full:
            return True
        a = self.transfer
        return all(a[word[k], word[k + 1]] for k in range(len(word) - 1))

    def require_admissible(self, word):
        if not self.is_admissible(word):
            raise InadmissibleWordError(f"word {word} is not admissible")

    def words(self, n):
        """Yield the admissible words of length ``n`` in lexicographic order."""
        if n < 1:
            raise ValueError(f"word length must be >= 1, got {n}")
        if self.is_full:
            yield from itertools.product(range(self.ell), repeat=n)
            return
        succ = self._succ
        word = [0] * n

        def rec(depth, prev):
            choices = range(self.ell) if depth == 0 else succ[prev]
            for sym in choices:
                word[depth] = sym
                if depth + 1 == n:
                    yield tuple(word)
                else:
                    yield from rec(depth + 1, sym)

        yield from rec(0, -1)

    def words_array(self, n, budget=None):
        """All admissible words of length ``n`` as an ``(count, n)`` int array.

        Rows are in lexicographic order.  Raises BudgetExceededError when the
        count would exceed ``budget``.
        """
        count = self.word_count(n)
        if budget is not None and count > budget:
            raise BudgetExceededError(
                f"{count} words of length {n} exceed the budget of {budget}"
            )
        if self.is_full:
            idx = np.arange(count, dtype=np.int64)
            out = np.empty((count, n), dtype=np.int64)
            for pos in range(n - 1, -1, -1):
                out[:, pos] = idx % self.ell
                idx //= self.ell
            return out
        arr = np.arange(self.ell, dtype=np.int64)[:, None]
        for _ in range(n - 1):
            degrees = np.array([len(self._succ[s]) for s in arr[:, -1]])
            ext = np.concatenate([self._succ[s] for s in arr[:, -1]])
            arr = np.hstack([np.repeat(arr, degrees, axis=0), ext[:, None]])
        return arr

    def word_count(self, n):
        """Exact number of admissible words of length ``n`` (Python int)."""
        if n < 1:
            raise ValueError(f"word length must be >= 1, got {n}")
        if self.is_full:
            return self.ell ** n
        power = _int_mat_pow(self.transfer.tolist(), n - 1)
        return sum(sum(row) for row in power)

    def block_shift(self, n):
        """Recode by non-overlapping blocks of length ``n``.

        Words of length n become the fresh alphabet and no constraint is
        imposed across block boundaries, so the result is a genuine full
        shift; the instance keeps a back-mapping from new symbols to words.
        """
        return BlockShift(self, n)


class BlockShift(Subshift):
    """Full shift over the length-``n`` words of a base subshift.

    The symbol table is lazy: alphabets like 3**40 exist combinatorially
    but cannot be materialized, so symbols are ranked/unranked on demand.
    """

    def __init__(self, base, n):
        if n < 1:
            raise ValueError(f"block length must be >= 1, got {n}")
        self.base = base
        self.block_len = n
        self.ell = base.word_count(n)
        self.transfer = None
        self._succ = None
        # Suffix counts: _tail_counts[k][s] = number of admissible
        # continuations of length k starting from symbol s.
        if not base.is_full:
            counts = [[1] * base.ell]
            a = base.transfer.tolist()
            for _ in range(n - 1):
                prev = counts[-1]
                counts.append(
                    [sum(a[i][j] * prev[j] for j in range(base.ell)) for i in range(base.ell)]
                )
            self._tail_counts = counts
        else:
            self._tail_counts = None

    def word_for_symbol(self, j):
        """The length-``n`` base word at lexicographic rank ``j``."""
        n, base = self.block_len, self.base
        if not 0 <= j < self.ell:
            raise ValueError(f"symbol {j} out of range 0..{self.ell - 1}")
        if base.is_full:
            word = []
            for pos in range(n):
                q = base.ell ** (n - 1 - pos)
                word.append(int(j // q))
                j %= q
            return tuple(word)
        word = []
        prev = None
        for pos in range(n):
            choices = range(base.ell) if prev is None else base.successors(prev)
            for sym in choices:
                block = self._tail_counts[n - 1 - pos][sym]
                if j < block:
                    word.append(int(sym))
                    prev = sym
                    break
                j -= block
        return tuple(word)

    def symbol_for_word(self, word):
        """Lexicographic rank of an admissible length-``n`` base word."""
        n, base = self.block_len, self.base
        if len(word) != n:
            raise ValueError(f"expected a word of length {n}, got {len(word)}")
        base.require_admissible(word)
        if base.is_full:
            rank = 0
            for sym in word:
                rank = rank * base.ell + sym
            return rank
        rank = 0
        prev = None
        for pos, sym in enumerate(word):
            choices = range(base.ell) if prev is None else base.successors(prev)
            for cand in choices:
                if cand == sym:
                    break
                rank += self._tail_counts[n - 1 - pos][cand]
            prev = sym
        return rank


def _int_mat_pow(a, k):
    """Exact integer power of a square matrix given as nested lists."""
    size = len(a)
    result = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    base = [row[:] for row in a]
    while k:
        if k & 1:
            result = _int_mat_mul(result, base)
        k >>= 1
        if k:
            base = _int_mat_mul(base, base)
    return result


def _int_mat_mul(a, b):
    size = len(a)
    return [
        [sum(a[i][k] * b[k][j] for k in range(size)) for j in range(size)]
        for i in range(size)
    ]


@dataclass(frozen=True)
class StoppingFamily:
    """Prefix-free word family whose cylinders partition the subshift.

    Built by expanding words until the supremum of exp(S_n h) over the
    cylinder first drops below the threshold ``r``.
    """

    words: tuple
    r: float
    min_len: int
    max_len: int
    _index: frozenset = field(repr=False)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return tuple(word) in self._index

    def prefix_in_family(self, word):
        """The unique family prefix of a long admissible word.

        Raises ValueError when zero or several prefixes are found, which
        would mean the family does not partition the shift.
        """
        hits = [
            tuple(word[:k])
            for k in range(self.min_len, min(self.max_len, len(word)) + 1)
            if tuple(word[:k]) in self._index
        ]
        if len(hits) != 1:
            raise ValueError(f"word {word} has {len(hits)} prefixes in the family")
        return hits[0]


# Threshold ties resolve toward continued expansion, matching the strict
# inequality in the stopping rule.
_TIE_REL = 1e-9


def stopping_family(subshift, sup_snh, r, node_budget=2_000_000):
    """Expand words until ``sup_snh`` first drops below ``log r``.

    Parameters
    ----------
    subshift : Subshift
    sup_snh : callable
        Maps a word I to the log of sup over the cylinder [I] of
        exp(S_|I| h), for a uniformly negative potential h.  Must strictly
        decrease along every extension.
    r : float
        Threshold, 0 < r < sup exp(h).

    Returns
    -------
    StoppingFamily
    """
    if not 0.0 < r:
        raise ValueError(f"r must be positive, got {r}")
    log_r = math.log(r)
    tol = _TIE_REL * max(1.0, abs(log_r))

    roots = [((s,), sup_snh((s,))) for s in range(subshift.ell)]
    r0 = math.exp(max(v for _, v in roots))
    if not r < r0:
        raise ValueError(f"r must be below sup exp(h) = {r0:.6g}, got {r}")

    out = []
    drops = []
    stack = list(reversed(roots))
    visited = 0
    while stack:
        word, value = stack.pop()
        visited += 1
        if visited > node_budget:
            raise BudgetExceededError(f"stopping family exceeded {node_budget} nodes")
        if value < log_r - tol:
            out.append(word)
            continue
        children = []
        for sym in subshift.successors(word[-1]):
            child = word + (int(sym),)
            cv = sup_snh(child)
            if cv >= value:
                raise NonContractivePotentialError(
                    f"potential failed to decrease from {word} to {child}"
                )
            drops.append(value - cv)
            children.append((child, cv))
        stack.extend(reversed(children))

    lengths = [len(w) for w in out]
    min_len, max_len = min(lengths), max(lengths)
    _assert_depth_bounds(min_len, max_len, log_r, drops)
    return StoppingFamily(
        words=tuple(out), r=r, min_len=min_len, max_len=max_len, _index=frozenset(out)
    )


def _assert_depth_bounds(min_len, max_len, log_r, drops):
    # Depths are pinched between log(1/r) divided by the extreme one-step
    # decrements of the potential.
    if not drops:
        return
    d_hi, d_lo = max(drops), min(drops)
    need = -log_r  # log(1/r)
    assert min_len >= need / d_hi - 1.0 - 1e-9, "family shallower than the depth bound"
    assert max_len <= need / d_lo + 1.0 + 1e-9, "family deeper than the depth bound"
