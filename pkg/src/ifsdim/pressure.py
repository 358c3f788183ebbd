"""Sub-additive topological pressure from word-partition sums, the
dimension solvers built on it, covering-bound exponents, and the stopping
family slope estimator.

The partition sum at level n runs over the admissible words of length n;
each word contributes the supremum over its cylinder of the singular value
function of the n-step Jacobian.  Suprema are exact for affine systems and
probe-approximated otherwise (the fixed continuation plus a few random
admissible tails).  When every one-step Jacobian coincides the whole sum
collapses to word-count times a single spectrum, which is what makes deep
levels (n of several dozen) affordable.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .ergodic import entropy, lyapunov_exponents
from .errors import BudgetExceededError
from .shift import stopping_family
from .singular import log_svf, product_spectrum
from .systems import batched_code_points, batched_log_spectra, tail_length

DEFAULT_BUDGET = 20_000_000
DEFAULT_PROBES = 4
_CHUNK_TARGET = 1 << 15


# ---------------------------------------------------------------------------
# word enumeration in bounded chunks

def _suffix_counts(subshift, n):
    """counts[k][s] = admissible continuations of length k after symbol s."""
    if subshift.is_full:
        return None
    counts = [[1] * subshift.ell]
    a = subshift.transfer.tolist()
    for _ in range(n):
        prev = counts[-1]
        counts.append(
            [
                sum(a[i][j] * prev[j] for j in range(subshift.ell))
                for i in range(subshift.ell)
            ]
        )
    return counts


def _expand_from(subshift, starts, extra):
    """Append ``extra`` admissible symbols to each start row, lex order."""
    arr = starts
    for _ in range(extra):
        if subshift.is_full:
            ell = subshift.ell
            ext = np.tile(np.arange(ell, dtype=np.int64), arr.shape[0])
            arr = np.hstack(
                [np.repeat(arr, ell, axis=0), ext[:, None]]
            )
        else:
            succ = subshift._succ
            degrees = np.array([len(succ[s]) for s in arr[:, -1]])
            ext = np.concatenate([succ[s] for s in arr[:, -1]])
            arr = np.hstack([np.repeat(arr, degrees, axis=0), ext[:, None]])
    return arr


def _word_chunks(subshift, n, chunk_target=_CHUNK_TARGET):
    """Yield the length-``n`` words as lex-ordered ``(rows, n)`` arrays."""
    counts = _suffix_counts(subshift, n)

    def tail_count(sym, k):
        if counts is None:
            return subshift.ell ** k
        return counts[k][sym]

    def rec(prefix):
        depth = len(prefix)
        size = tail_count(prefix[-1], n - depth) if depth else subshift.word_count(n)
        if size <= chunk_target or depth == n:
            start = np.array([prefix], dtype=np.int64)
            yield _expand_from(subshift, start, n - depth)
            return
        choices = range(subshift.ell) if depth == 0 else subshift.successors(prefix[-1])
        for sym in choices:
            yield from rec(prefix + (int(sym),))

    if subshift.word_count(n) <= chunk_target:
        yield subshift.words_array(n)
    else:
        yield from rec(())


# ---------------------------------------------------------------------------
# cylinder suprema via probe continuations

def _padded_successors(subshift):
    ell = subshift.ell
    if subshift.is_full:
        deg = np.full(ell, ell, dtype=np.int64)
        table = np.tile(np.arange(ell, dtype=np.int64), (ell, 1))
        return table, deg
    deg = np.array([len(subshift._succ[s]) for s in range(ell)], dtype=np.int64)
    table = np.zeros((ell, deg.max()), dtype=np.int64)
    for s in range(ell):
        table[s, : deg[s]] = subshift._succ[s]
    return table, deg


def _canonical_tails(subshift, words, m, succ_table):
    """Periodic continuation where admissible, lex-first chain otherwise."""
    rows, n = words.shape
    tails = np.empty((rows, m), dtype=np.int64)
    cur = words[:, -1].copy()
    for j in range(m):
        cur = succ_table[cur, 0]
        tails[:, j] = cur
    reps = -(-m // n)  # ceil
    periodic = np.tile(words, (1, reps))[:, :m]
    if subshift.is_full:
        ok = np.ones(rows, dtype=bool)
    else:
        ok = subshift.transfer[words[:, -1], words[:, 0]].astype(bool)
    tails[ok] = periodic[ok]
    return tails


def _random_tails(words, m, succ_table, succ_deg, rng):
    rows = words.shape[0]
    tails = np.empty((rows, m), dtype=np.int64)
    cur = words[:, -1].copy()
    for j in range(m):
        pick = rng.integers(0, succ_deg[cur])
        cur = succ_table[cur, pick]
        tails[:, j] = cur
    return tails


def _probe_spectra(subshift, sys, words, probes, rng_seq):
    """Log spectra along each word for each probe tail: ``(rows, P, d)``."""
    n_tail = tail_length(sys)
    succ_table, succ_deg = _padded_successors(subshift)
    n_probes = 1 if sys.is_affine else probes + 1
    rows = words.shape[0]
    out = np.empty((rows, n_probes, sys.d))
    for p in range(n_probes):
        if p == 0:
            tails = _canonical_tails(subshift, words, n_tail, succ_table)
        else:
            rng = np.random.default_rng(rng_seq.spawn(1)[0])
            tails = _random_tails(words, n_tail, succ_table, succ_deg, rng)
        if sys.kind == "repeller":
            eval_words = np.hstack([words, tails[:, :1]])
            tail_pts = batched_code_points(sys, tails)
        else:
            eval_words = words
            tail_pts = batched_code_points(sys, tails)
        out[:, p, :] = batched_log_spectra(sys, eval_words, tail_pts)
    return out


def _log_svf_rows(la, s):
    """Vectorized log singular value function over rows of spectra."""
    d = la.shape[-1]
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if s >= d:
        return (s / d) * la.sum(axis=-1)
    k = int(s)
    return la[..., :k].sum(axis=-1) + (s - k) * la[..., k]


class _LogSumExp:
    """Streaming log-sum-exp with a canonical accumulation order."""

    def __init__(self):
        self.peak = -math.inf
        self.total = 0.0

    def add(self, values):
        vmax = float(values.max())
        if vmax > self.peak:
            if self.total > 0.0:
                self.total *= math.exp(self.peak - vmax)
            self.peak = vmax
        self.total += float(np.exp(values - self.peak).sum())

    def value(self):
        if self.total == 0.0:
            return -math.inf
        return self.peak + math.log(self.total)


# ---------------------------------------------------------------------------
# partition sums and pressure

def _log_big(x):
    return math.log(x)


def _constant_level_spectrum(sys, n):
    """Spectrum of the shared n-step Jacobian, or None."""
    if sys is None or sys.shared_linear is None:
        return None
    return product_spectrum([sys.shared_linear] * n)


def _check_budget(subshift, sys, n, probes, budget):
    count = subshift.word_count(n)
    leaf = count * (1 if (sys is None or sys.is_affine) else probes + 1)
    if leaf > budget:
        raise BudgetExceededError(
            f"level {n} needs {leaf} leaf evaluations, budget is {budget}"
        )
    return count


def log_partition_sum(
    subshift, sys, s, n, probes=DEFAULT_PROBES, seed=0, budget=DEFAULT_BUDGET
):
    """Log of the level-``n`` word-partition sum at exponent ``s``.

    Streams over the admissible words of length ``n``; each contributes the
    (probe-approximated, exact for affine) supremum over its cylinder of the
    log singular value function of the word's Jacobian product.  Accumulated
    with a stable log-sum-exp in lexicographic order.
    """
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if s == 0.0:
        return _log_big(subshift.word_count(n))
    if sys is None:
        raise ValueError("a system is required for s > 0")
    spec = _constant_level_spectrum(sys, n)
    if spec is not None:
        return _log_big(subshift.word_count(n)) + log_svf(spec, s)
    _check_budget(subshift, sys, n, probes, budget)
    acc = _LogSumExp()
    rng_seq = np.random.SeedSequence((seed, n))
    for words in _word_chunks(subshift, n):
        spectra = _probe_spectra(subshift, sys, words, probes, rng_seq)
        acc.add(_log_svf_rows(spectra, s).max(axis=1))
    return acc.value()


@dataclass(frozen=True)
class PressureEstimate:
    """Per-level pressure values and their extrapolated limit.

    ``upper`` (the minimum over levels) is a rigorous upper bound whenever
    the cylinder suprema are exact, i.e. for affine systems; otherwise both
    ``upper`` and ``bracket_width`` are empirical.
    """

    s: float
    n_list: tuple
    Pn: tuple
    value: float
    upper: float
    bracket_width: float
    word_counts: tuple
    elapsed_ms: tuple
    sup_exact: bool


def _aitken(p0, p1, p2):
    denom = (p2 - p1) - (p1 - p0)
    if abs(denom) < 1e-14:
        return p2
    return p2 - (p2 - p1) ** 2 / denom


def default_n_list(subshift, sys, budget=DEFAULT_BUDGET, probes=DEFAULT_PROBES):
    """Largest geometric level ladder fitting the evaluation budget."""
    ladder = [1, 2, 4, 8, 16, 24, 32]
    if sys is not None and sys.shared_linear is not None:
        return ladder
    weight = 1 if (sys is None or sys.is_affine) else probes + 1
    out = []
    spent = 0
    for n in ladder:
        cost = subshift.word_count(n) * weight
        if spent + cost > budget:
            break
        out.append(n)
        spent += cost
    return out or [1]


def pressure(
    subshift,
    sys,
    s,
    n_list=None,
    probes=DEFAULT_PROBES,
    seed=0,
    budget=DEFAULT_BUDGET,
):
    """Topological pressure estimate from an ascending ladder of levels.

    The limit is Aitken-accelerated when the last three level values are
    monotone (they always are for exact suprema, by sub-additivity);
    otherwise the deepest level value is reported with the full bracket.
    """
    if n_list is None:
        n_list = default_n_list(subshift, sys, budget, probes)
    n_list = sorted(set(int(n) for n in n_list))
    pn = []
    counts = []
    elapsed = []
    for n in n_list:
        t0 = time.perf_counter()
        pn.append(log_partition_sum(subshift, sys, s, n, probes, seed, budget) / n)
        elapsed.append((time.perf_counter() - t0) * 1e3)
        counts.append(subshift.word_count(n))
    value = pn[-1]
    if len(pn) >= 3:
        tail = pn[-3:]
        diffs = np.diff(tail)
        if (diffs <= 0).all() or (diffs >= 0).all():
            value = _aitken(*tail)
    sup_exact = sys is None or sys.is_affine or s == 0.0
    return PressureEstimate(
        s=float(s),
        n_list=tuple(n_list),
        Pn=tuple(pn),
        value=float(value),
        upper=float(min(pn)),
        bracket_width=float(abs(pn[-1] - value)),
        word_counts=tuple(counts),
        elapsed_ms=tuple(elapsed),
        sup_exact=sup_exact,
    )


# ---------------------------------------------------------------------------
# dimension solvers

@dataclass(frozen=True)
class DimensionSolveResult:
    """Root of the pressure-zero equation with its bisection bracket.

    ``s_conservative`` is the companion root of the min-over-levels upper
    bound; ``degenerate`` flags a system whose pressure is non-positive
    already at s = 0.
    """

    s_star: float
    pressure_at_root: float
    iterations: int
    s_bracket: tuple
    n_used: int
    s_conservative: float
    degenerate: bool = False


class _CachedPressure:
    """Pressure as a function of s with the word spectra computed once."""

    def __init__(self, subshift, sys, n_list, probes, seed, budget):
        self.n_list = n_list
        self.counts = {n: subshift.word_count(n) for n in n_list}
        self.spectra = {}
        self.const = {}
        total = 0
        for n in n_list:
            spec = _constant_level_spectrum(sys, n)
            if spec is not None:
                self.const[n] = spec
                continue
            count = _check_budget(subshift, sys, n, probes, budget)
            total += count * (1 if sys.is_affine else probes + 1)
            if total > budget:
                raise BudgetExceededError(
                    f"ladder {n_list} exceeds the budget of {budget}"
                )
            rng_seq = np.random.SeedSequence((seed, n))
            chunks = [
                _probe_spectra(subshift, sys, words, probes, rng_seq)
                for words in _word_chunks(subshift, n)
            ]
            self.spectra[n] = chunks

    def level_value(self, n, s):
        if n in self.const:
            return (_log_big(self.counts[n]) + log_svf(self.const[n], s)) / n
        acc = _LogSumExp()
        for chunk in self.spectra[n]:
            acc.add(_log_svf_rows(chunk, s).max(axis=1))
        return acc.value() / n

    def __call__(self, s):
        pn = [self.level_value(n, s) for n in self.n_list]
        value = pn[-1]
        if len(pn) >= 3:
            tail = pn[-3:]
            diffs = np.diff(tail)
            if (diffs <= 0).all() or (diffs >= 0).all():
                value = _aitken(*tail)
        return value, min(pn)


def solve_dim_s(
    subshift,
    sys,
    tol_s=None,
    n_list=None,
    probes=DEFAULT_PROBES,
    seed=0,
    budget=DEFAULT_BUDGET,
    tol_p=1e-8,
):
    """Zero of ``s -> pressure(s)`` by bisection on ``[0, 2d]``.

    The pressure is strictly decreasing in s (slope at most log of the
    largest contraction factor), so bisection is sound.  ``tol_s`` defaults
    to 1e-6 for affine systems and 1e-3 for probe-approximated ones.
    """
    if tol_s is None:
        tol_s = 1e-6 if sys.is_affine else 1e-3
    if n_list is None:
        n_list = default_n_list(subshift, sys, budget, probes)
    n_list = sorted(set(int(n) for n in n_list))
    cache = _CachedPressure(subshift, sys, n_list, probes, seed, budget)

    p_zero, up_zero = cache(0.0)
    if p_zero <= 0.0:
        return DimensionSolveResult(
            s_star=0.0,
            pressure_at_root=p_zero,
            iterations=0,
            s_bracket=(0.0, 0.0),
            n_used=max(n_list),
            s_conservative=0.0,
            degenerate=True,
        )

    hi = 2.0 * sys.d
    p_hi, up_hi = cache(hi)
    if p_hi > 0.0:
        raise ValueError(
            f"pressure is still positive at s = {hi}; root exceeds the 2d bracket"
        )

    def bisect(fn, lo, hi_, flo):
        it = 0
        fmid = flo
        while hi_ - lo > tol_s:
            mid = 0.5 * (lo + hi_)
            fmid = fn(mid)
            it += 1
            if fmid > 0.0:
                lo = mid
            else:
                hi_ = mid
            if abs(fmid) < tol_p and hi_ - lo <= tol_s:
                break
        return 0.5 * (lo + hi_), (lo, hi_), it, fmid

    s_star, bracket, iters, p_at = bisect(lambda s: cache(s)[0], 0.0, hi, p_zero)
    s_cons, _, _, _ = bisect(lambda s: cache(s)[1], 0.0, hi, up_zero)
    return DimensionSolveResult(
        s_star=float(s_star),
        pressure_at_root=float(p_at),
        iterations=iters,
        s_bracket=(float(bracket[0]), float(bracket[1])),
        n_used=max(n_list),
        s_conservative=float(s_cons),
    )


def solve_tn(
    subshift,
    sys,
    n,
    k,
    probes=DEFAULT_PROBES,
    seed=0,
    budget=DEFAULT_BUDGET,
    tol_t=1e-9,
):
    """Zero of the block-level covering-bound pressure at level ``n``.

    The potential couples the k-fold singular value product with the
    (k+1)-st singular value of the n-step Jacobian, plus the dimensional
    covering constant (2d)^d; its root ``t_n`` upper-bounds the attractor's
    box dimension and decreases toward the singularity dimension as the
    level grows.
    """
    if not 0 <= k <= sys.d - 1:
        raise ValueError(f"k must be in 0..{sys.d - 1}, got {k}")
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    log_c = sys.d * math.log(2 * sys.d)
    spec = _constant_level_spectrum(sys, n)
    if spec is not None:
        log_count = _log_big(subshift.word_count(n))
        # Linear in t: log_count + log_c + log phi^k + (t - k) log alpha_{k+1} = 0.
        a = log_count + log_c + log_svf(spec, float(k))
        b = float(spec[k])
        return k - a / b

    _check_budget(subshift, sys, n, probes, budget)
    rng_seq = np.random.SeedSequence((seed, n))
    phi_k = []
    alpha = []
    for words in _word_chunks(subshift, n):
        spectra = _probe_spectra(subshift, sys, words, probes, rng_seq)
        phi_k.append(_log_svf_rows(spectra, float(k)))
        alpha.append(spectra[..., k])
    phi_k = np.vstack(phi_k) if len(phi_k) > 1 else phi_k[0]
    alpha = np.vstack(alpha) if len(alpha) > 1 else alpha[0]

    def level_sum(t):
        acc = _LogSumExp()
        acc.add((phi_k + (t - k) * alpha).max(axis=1))
        return acc.value() + log_c

    lo, hi = 0.0, float(k + 1)
    while level_sum(hi) > 0.0:
        hi *= 2.0
        if hi > 64 * sys.d:
            raise ValueError("covering-bound pressure has no root below 64 d")
    while hi - lo > tol_t:
        mid = 0.5 * (lo + hi)
        if level_sum(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# stopping-family slope

def _as_symbol_potential(value, ell, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(ell, float(arr))
    if arr.shape != (ell,):
        raise ValueError(f"{name} must be a scalar or one value per symbol")
    return arr


def _weighted_word_log_sum(subshift, g, n):
    """log of sum over admissible length-n words of exp(sum of g)."""
    a = (
        np.ones((subshift.ell, subshift.ell))
        if subshift.is_full
        else subshift.transfer.astype(float)
    )
    w = np.exp(g - g.max())
    log_acc = float(g.max())
    for _ in range(n - 1):
        w = (a.T @ w) * np.exp(g - g.max())
        peak = w.max()
        w /= peak
        log_acc += math.log(peak) + float(g.max())
    return log_acc + math.log(w.sum())


def _stop_depth(log_r, h_val):
    """First n with n * h_val < log r, resolving float ties upward."""
    x = log_r / h_val
    near = round(x)
    if abs(x - near) <= 1e-9 * max(1.0, abs(x)):
        return int(near) + 1
    return math.floor(x) + 1


def theta_series(subshift, g, h, r_grid, node_budget=2_000_000):
    """log of the stopping-family weighted sums, one value per threshold.

    ``g`` and ``h`` are one-step potentials (scalars or one value per
    symbol); ``h`` must be uniformly negative.  For constant ``h`` the
    family is a full level set and the sum reduces to a weighted transfer
    power, so deep thresholds stay cheap.
    """
    g = _as_symbol_potential(g, subshift.ell, "g")
    h = _as_symbol_potential(h, subshift.ell, "h")
    if (h >= 0).any():
        raise ValueError("h must be negative on every symbol")
    r_grid = np.asarray(r_grid, dtype=float)
    out = np.empty(r_grid.size)
    constant_h = float(np.ptp(h)) == 0.0
    for i, r in enumerate(r_grid):
        log_r = math.log(r)
        if constant_h:
            depth = _stop_depth(log_r, float(h[0]))
            out[i] = _weighted_word_log_sum(subshift, g, depth)
        else:
            fam = stopping_family(
                subshift,
                lambda w: float(h[list(w)].sum()),
                r,
                node_budget=node_budget,
            )
            vals = np.array([g[list(w)].sum() for w in fam.words])
            peak = vals.max()
            out[i] = peak + math.log(np.exp(vals - peak).sum())
    return out


def theta_slope(subshift, g, h, r_grid, drop_largest=2, node_budget=2_000_000):
    """Least-squares slope exponent of the stopping-family sums.

    Returns ``t`` with ``log Theta_r ~ -t log r`` fitted over the threshold
    grid after discarding the ``drop_largest`` coarsest thresholds (the
    transient regime); ``t`` solves the coupled pressure equation in the
    limit of small thresholds.
    """
    r_grid = np.sort(np.asarray(r_grid, dtype=float))[::-1]
    if r_grid.size - drop_largest < 2:
        raise ValueError("need at least two thresholds after the transient cut")
    log_theta = theta_series(subshift, g, h, r_grid, node_budget)
    x = np.log(r_grid[drop_largest:])
    y = log_theta[drop_largest:]
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# variational inequality

def variational_gap(
    subshift,
    sys,
    s,
    m,
    n_list=None,
    probes=DEFAULT_PROBES,
    seed=0,
    budget=DEFAULT_BUDGET,
    n_orbit=200,
    n_samples=64,
):
    """Pressure minus the measure's entropy-plus-exponents functional.

    Nonnegative up to numerical slack for every invariant measure; zero
    exactly at equilibrium measures.
    """
    m.check_support(sys.subshift)
    est = pressure(subshift, sys, s, n_list, probes, seed, budget)
    spec = lyapunov_exponents(sys, m, n_orbit=n_orbit, n_samples=n_samples, seed=seed)
    functional = entropy(m) + log_svf(spec.lam, s)
    return float(est.value - functional)
