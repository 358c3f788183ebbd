"""Concrete dynamical models: contracting IFS maps (affine or smoothly
perturbed affine) and expanding repellers given by their inverse branches
over a subshift of finite type.

All maps carry a certified contraction factor ``gamma`` and a shared
axis-aligned domain box.  Map application and Jacobian evaluation are
batch-aware: points may be ``(d,)`` or ``(n, d)`` arrays.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractionError,
    InadmissibleWordError,
    NonFiniteError,
    PointOutsideDomainError,
    SingularMatrixError,
)
from .shift import Subshift

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("box corners must be 1-D arrays of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise NonFiniteError("box corners must be finite")
        if not (hi > lo).all():
            raise ValueError("box must have positive extent in every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self):
        return self.lo.size

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, points, tol=1e-9):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return bool(
            (pts >= self.lo - tol).all() and (pts <= self.hi + tol).all()
        )

    def mesh(self, per_axis=5):
        """Deterministic probe mesh including all corners."""
        axes = [np.linspace(self.lo[i], self.hi[i], per_axis) for i in range(self.d)]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=-1)


class AffineMap:
    """``z -> linear @ z + translation`` restricted to a domain box."""

    is_affine = True

    def __init__(self, linear, translation, domain):
        a = np.asarray(linear, dtype=float)
        b = np.asarray(translation, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"linear part must be square, got shape {a.shape}")
        if b.shape != (a.shape[0],):
            raise ValueError("translation length must match the matrix dimension")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise NonFiniteError("map coefficients must be finite")
        if domain.d != a.shape[0]:
            raise ValueError("domain dimension must match the matrix dimension")
        self.linear = a
        self.translation = b
        self.domain = domain
        self.d = a.shape[0]
        self.gamma = float(np.linalg.norm(a, 2))
        if not self.gamma < 1.0:
            raise ContractionError(
                f"operator norm {self.gamma:.6g} is not below 1"
            )

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return z @ self.linear.T + self.translation

    def jacobian(self, z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            return self.linear.copy()
        return np.broadcast_to(self.linear, (z.shape[0], self.d, self.d)).copy()


class SinePerturbedMap(AffineMap):
    """Affine map plus a closed-form smooth perturbation.

    ``f(z) = A z + b + amplitude * p(z)`` with ``p_i(z) = sin(2 pi z_j)``,
    ``j = (i + 1) mod d``.  The perturbation Jacobian has a single entry
    per row, so its operator norm is at most ``2 pi |amplitude|`` and the
    certified contraction factor is ``|A|_2 + 2 pi |amplitude|``.
    """

    is_affine = False

    def __init__(self, linear, translation, amplitude, domain):
        super().__init__(linear, translation, domain)
        self.amplitude = float(amplitude)
        self.gamma = float(np.linalg.norm(self.linear, 2) + _TWO_PI * abs(self.amplitude))
        if not self.gamma < 1.0:
            raise ContractionError(
                f"certified norm bound {self.gamma:.6g} is not below 1"
            )

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        rolled = np.roll(z, -1, axis=-1)
        return z @ self.linear.T + self.translation + self.amplitude * np.sin(_TWO_PI * rolled)

    def jacobian(self, z):
        z = np.asarray(z, dtype=float)
        rolled = np.roll(z, -1, axis=-1)
        bump = self.amplitude * _TWO_PI * np.cos(_TWO_PI * rolled)
        rows = np.arange(self.d)
        cols = (rows + 1) % self.d
        if z.ndim == 1:
            jac = self.linear.copy()
            jac[rows, cols] += bump
            return jac
        jac = np.broadcast_to(self.linear, (z.shape[0], self.d, self.d)).copy()
        jac[:, rows, cols] += bump
        return jac


def _check_into_domain(fmap, label):
    probes = fmap.domain.mesh(per_axis=max(2, int(round(256 ** (1.0 / fmap.d)))))
    rng = np.random.default_rng(0)
    extra = fmap.domain.lo + rng.random((64, fmap.d)) * (fmap.domain.hi - fmap.domain.lo)
    images = fmap(np.vstack([probes, extra]))
    if not fmap.domain.contains(images):
        raise PointOutsideDomainError(f"{label} does not map the domain into itself")


def _shared_linear(maps):
    first = maps[0].linear
    for m in maps[1:]:
        if not np.array_equal(m.linear, first):
            return None
    if not all(m.is_affine for m in maps):
        return None
    return first


class IfsSystem:
    """Iterated function system on a shared domain box.

    ``code_space`` defaults to the full shift on ``len(maps)`` symbols; a
    proper subshift restricts which compositions are considered.
    """

    kind = "ifs"

    def __init__(self, maps, code_space=None):
        if not maps:
            raise ValueError("an IFS needs at least one map")
        d = maps[0].d
        domain = maps[0].domain
        for m in maps:
            if m.d != d or m.domain is not domain and not (
                np.array_equal(m.domain.lo, domain.lo)
                and np.array_equal(m.domain.hi, domain.hi)
            ):
                raise ValueError("all maps must share dimension and domain")
        for i, m in enumerate(maps):
            _check_into_domain(m, f"map {i}")
        self.maps = list(maps)
        self.d = d
        self.ell = len(maps)
        self.domain = domain
        self.code_space = code_space if code_space is not None else Subshift.full(self.ell)
        if self.code_space.ell != self.ell:
            raise ValueError("code space alphabet must match the number of maps")
        self.gamma_max = max(m.gamma for m in maps)
        self.is_affine = all(m.is_affine for m in maps)
        self.shared_linear = _shared_linear(self.maps)

    @property
    def subshift(self):
        return self.code_space

    def steps_per_word(self, length):
        return length

    def map_for_step(self, word, pos):
        return self.maps[word[pos]]

    def apply_symbols(self, symbols, z):
        """Apply the map indexed by ``symbols[i]`` to row ``z[i]`` (in place)."""
        for s in range(self.ell):
            mask = symbols == s
            if mask.any():
                z[mask] = self.maps[s](z[mask])
        return z

    def jacobians_at(self, symbols, z):
        out = np.empty((z.shape[0], self.d, self.d))
        for s in range(self.ell):
            mask = symbols == s
            if mask.any():
                out[mask] = self.maps[s].jacobian(z[mask])
        return out


class RepellerSystem:
    """Expanding repeller specified by local inverse branches.

    ``branches[(i, j)]`` is the contracting inverse branch carrying the
    piece coded ``j`` into the piece coded ``i j``; a branch exists exactly
    when ``transfer[i, j] == 1``.  Words of length ``n`` drive ``n - 1``
    branch applications.
    """

    kind = "repeller"

    def __init__(self, branches, transfer):
        self.subshift = Subshift.sft(transfer)
        a = self.subshift.transfer
        ell = self.subshift.ell
        expected = {(i, j) for i in range(ell) for j in range(ell) if a[i, j]}
        if set(branches) != expected:
            raise ValueError("branches must exist exactly for allowed pairs")
        some = next(iter(branches.values()))
        d, domain = some.d, some.domain
        for key, m in branches.items():
            if m.d != d or not (
                np.array_equal(m.domain.lo, domain.lo)
                and np.array_equal(m.domain.hi, domain.hi)
            ):
                raise ValueError("all branches must share dimension and domain")
            _check_into_domain(m, f"branch {key}")
        self.branches = dict(branches)
        self.d = d
        self.ell = ell
        self.domain = domain
        self.gamma_max = max(m.gamma for m in branches.values())
        self.is_affine = all(m.is_affine for m in branches.values())
        self.shared_linear = _shared_linear(list(branches.values()))

    @property
    def code_space(self):
        return self.subshift

    def steps_per_word(self, length):
        return max(length - 1, 0)

    def map_for_step(self, word, pos):
        return self.branches[(word[pos], word[pos + 1])]

    def apply_pairs(self, first, second, z):
        for (i, j), branch in self.branches.items():
            mask = (first == i) & (second == j)
            if mask.any():
                z[mask] = branch(z[mask])
        return z

    def jacobians_at_pairs(self, first, second, z):
        out = np.empty((z.shape[0], self.d, self.d))
        for (i, j), branch in self.branches.items():
            mask = (first == i) & (second == j)
            if mask.any():
                out[mask] = branch.jacobian(z[mask])
        return out


def code_point(sys, word, z0=None):
    """Approximate the coding-map image of any sequence starting with ``word``.

    Returns ``(point, error_bound)``; the bound is ``gamma^k diam(U)`` with
    ``k`` the number of contraction steps the word drives.
    """
    sys.subshift.require_admissible(word)
    if len(word) < 1:
        raise InadmissibleWordError("word must have length >= 1")
    z = np.asarray(z0, dtype=float) if z0 is not None else sys.domain.center
    if not sys.domain.contains(z):
        raise PointOutsideDomainError(f"start point {z} outside the domain box")
    steps = sys.steps_per_word(len(word))
    for pos in range(steps - 1, -1, -1):
        z = sys.map_for_step(word, pos)(z)
    return z, sys.gamma_max ** steps * sys.domain.diameter


def jacobians_along(sys, word, tail_point=None):
    """One-step Jacobians along a word, ordered so their product is the
    derivative of the word's composition at the tail point.

    For an IFS a word of length n yields n factors; for a repeller, n - 1
    (each branch consumes a pair of symbols).  Affine systems ignore the
    tail point entirely.
    """
    sys.subshift.require_admissible(word)
    steps = sys.steps_per_word(len(word))
    if steps < 1:
        raise InadmissibleWordError("word is too short to produce a Jacobian")
    z = np.asarray(tail_point, dtype=float) if tail_point is not None else sys.domain.center
    if not sys.domain.contains(z):
        raise PointOutsideDomainError(f"tail point {z} outside the domain box")
    jacs = []
    for pos in range(steps - 1, -1, -1):
        fmap = sys.map_for_step(word, pos)
        jacs.append(fmap.jacobian(z))
        z = fmap(z)
    jacs.reverse()
    return jacs


_CHUNK = 1 << 16


def chaos_game(sys, measure, n_points, burn_in, seed, prefix=()):
    """Sample the attractor (or repeller) under the push-forward of ``measure``.

    Each emitted point is an independent draw: a word of ``burn_in``
    contraction steps is sampled from the measure and composed, so every
    point lies within ``gamma^burn_in diam(U)`` of the invariant set and is
    distributed per the push-forward up to that resolution.  Deterministic
    given the seed; generation is chunked with counter-derived substreams.

    A non-empty ``prefix`` restricts sampling to the prefix's cylinder by
    composing the prefix maps on top of every sample.

    Returns ``(points, error_bound)`` with ``points`` of shape
    ``(n_points, d)``.
    """
    if n_points < 1 or burn_in < 1:
        raise ValueError("n_points and burn_in must be >= 1")
    measure.check_support(sys.subshift)
    if prefix:
        sys.subshift.require_admissible(prefix)

    is_repeller = sys.kind == "repeller"
    # A repeller branch consumes a symbol pair, so words carry one extra symbol.
    word_len = burn_in + 1 if is_repeller else burn_in
    start_state = prefix[-1] if (prefix and is_repeller) else None

    out = np.empty((n_points, sys.d))
    z0 = sys.domain.center
    for chunk_idx, lo in enumerate(range(0, n_points, _CHUNK)):
        hi = min(lo + _CHUNK, n_points)
        rng = np.random.default_rng(np.random.SeedSequence((seed, chunk_idx)))
        words = measure.sample_words(rng, hi - lo, word_len, start_state=start_state)
        z = np.tile(z0, (hi - lo, 1))
        if is_repeller:
            for t in range(burn_in - 1, -1, -1):
                sys.apply_pairs(words[:, t], words[:, t + 1], z)
        else:
            for t in range(burn_in - 1, -1, -1):
                sys.apply_symbols(words[:, t], z)
        if prefix:
            if is_repeller:
                # Junction pair (prefix[-1], w[0]) varies per sample.
                first = np.full(hi - lo, prefix[-1], dtype=np.int64)
                sys.apply_pairs(first, words[:, 0], z)
                for pos in range(len(prefix) - 2, -1, -1):
                    z = sys.branches[(prefix[pos], prefix[pos + 1])](z)
            else:
                for pos in range(len(prefix) - 1, -1, -1):
                    z = sys.maps[prefix[pos]](z)
        out[lo:hi] = z
    err = sys.gamma_max ** burn_in * sys.domain.diameter
    return out, err


def save_points_csv(path, points):
    """Write a point cloud as CSV, one point per row, 17 significant digits."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    np.savetxt(path, pts, delimiter=",", fmt="%.17g")


def tail_length(sys, tol=1e-12, cap=64):
    """Contraction steps needed to pin a coding point down to ``tol``."""
    g = sys.gamma_max
    diam = sys.domain.diameter
    if diam <= tol:
        return 1
    need = math.ceil(math.log(tol / diam) / math.log(g))
    return int(min(max(need, 1), cap))


def batched_code_points(sys, words):
    """Coding points of many words at once; one ``(d,)`` row per word."""
    words = np.asarray(words, dtype=np.int64)
    count = words.shape[0]
    z = np.tile(sys.domain.center, (count, 1))
    steps = sys.steps_per_word(words.shape[1])
    for pos in range(steps - 1, -1, -1):
        if sys.kind == "repeller":
            sys.apply_pairs(words[:, pos], words[:, pos + 1], z)
        else:
            sys.apply_symbols(words[:, pos], z)
    return z


def batched_log_spectra(sys, words, tails, renorm_every=16):
    """Log singular spectra of the Jacobian products along many words.

    ``words`` is ``(n, L)``; ``tails`` holds the evaluation point for the
    innermost step of each word.  Returns ``(n, d)`` log singular values,
    descending per row.  Like ``product_spectrum`` this folds blocks of
    ``renorm_every`` factors into a per-word orthogonal-times-log-diagonal
    factorization: a single dense product would drown the small singular
    directions in rounding noise once their relative size passes 1e-16.
    """
    from .singular import _graded_svd_u

    words = np.asarray(words, dtype=np.int64)
    n = words.shape[0]
    steps = sys.steps_per_word(words.shape[1])
    if steps < 1:
        raise ValueError("words are too short to produce a Jacobian")
    z = np.array(tails, dtype=float)
    if z.shape != (n, sys.d):
        raise ValueError("tails must be one point per word")

    u = None
    ld = np.zeros((n, sys.d))
    block = None
    block_scale = np.zeros(n)
    in_block = 0

    def fold():
        nonlocal u, ld, block, block_scale
        c = block if u is None else np.matmul(block, u)
        shifts = ld.max(axis=1)
        m = c * np.exp(ld - shifts[:, None])[:, None, :]
        spread = ld.max(axis=1) - ld.min(axis=1)
        wide = spread > 600.0
        uu, sv, _ = np.linalg.svd(m)
        if (sv[:, -1] <= 0.0).any() and not wide.any():
            raise SingularMatrixError("a word product lost rank")
        new_ld = np.log(np.maximum(sv, 1e-320)) + shifts[:, None]
        for i in np.flatnonzero(wide):
            # columns too graded for one dense SVD; split recursively
            uu[i], new_ld[i] = _graded_svd_u(c[i], ld[i])
        u = uu
        ld = new_ld + block_scale[:, None]
        block = None
        block_scale = np.zeros(n)

    for pos in range(steps - 1, -1, -1):
        if sys.kind == "repeller":
            jac = sys.jacobians_at_pairs(words[:, pos], words[:, pos + 1], z)
            sys.apply_pairs(words[:, pos], words[:, pos + 1], z)
        else:
            jac = sys.jacobians_at(words[:, pos], z)
            sys.apply_symbols(words[:, pos], z)
        block = jac if block is None else np.matmul(jac, block)
        peak = np.abs(block).max(axis=(1, 2))
        if (peak == 0.0).any() or not np.isfinite(peak).all():
            raise SingularMatrixError("a word product degenerated")
        block /= peak[:, None, None]
        block_scale += np.log(peak)
        in_block += 1
        if in_block == renorm_every:
            fold()
            in_block = 0
    if block is not None:
        fold()
    return ld
