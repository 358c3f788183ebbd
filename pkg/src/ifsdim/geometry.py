"""Explicit covering constructions and empirical box counting.

A small ball mapped through a C1 contraction lands close to an ellipsoid,
so its image can be covered by a controlled number of smaller balls whose
radius is the (k+1)-st singular value times the input radius.  Applying
this along a symbol word, innermost map first, yields a certified cover of
the word's piece of the attractor; box counting on sampled clouds gives
the empirical side of the comparison.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InsufficientResolutionError, SingularMatrixError
from .systems import batched_code_points

_WORST_CASE_AXIS = 1 << 21


@dataclass(frozen=True)
class BallCover:
    """Equal-radius ball cover of one word's piece of the invariant set.

    ``certified_count_bound`` is the product bound the construction is
    guaranteed to respect (base count times the per-step factors); the
    actual number of retained balls is usually far below it because balls
    that provably miss the piece are dropped. ``log_count_bound`` carries
    the same bound in log form for deep words.
    """

    centers: np.ndarray
    radius: float
    word: tuple
    certified_count_bound: float
    log_count_bound: float
    base_count: int
    base_radius: float

    def __len__(self):
        return self.centers.shape[0]

    @property
    def balls(self):
        return [(self.centers[i], self.radius) for i in range(len(self))]


def ellipsoid_cover(jac, center, r, k):
    """Cover ``center + jac . B(0, sqrt(d) r)`` by balls of one radius.

    The image ellipsoid sits inside the rectangular box spanned by the left
    singular frame with half-sides ``sqrt(d) alpha_i r``; tiling that box by
    cubes of side ``(2/sqrt(d)) alpha_{k+1} r`` and circumscribing each cube
    gives balls of radius ``alpha_{k+1} r``.  The count never exceeds
    ``(2d)^d phi^k(jac) / alpha_{k+1}(jac)^k``.
    """
    jac = np.asarray(jac, dtype=float)
    center = np.asarray(center, dtype=float)
    d = jac.shape[0]
    if not 0 <= k <= d - 1:
        raise ValueError(f"k must be in 0..{d - 1}, got {k}")
    if r <= 0:
        raise ValueError("radius must be positive")
    u, alpha, _ = np.linalg.svd(jac)
    if alpha[-1] <= 0:
        raise SingularMatrixError("Jacobian is numerically singular")
    ak1 = alpha[k]
    half_sides = math.sqrt(d) * alpha * r
    cube_side = 2.0 * ak1 * r / math.sqrt(d)
    per_axis = np.maximum(np.ceil(2.0 * half_sides / cube_side - 1e-12), 1).astype(int)
    grids = [
        (np.arange(m) + 0.5) * cube_side - 0.5 * m * cube_side for m in per_axis
    ]
    mesh = np.meshgrid(*grids, indexing="ij")
    local = np.stack([g.ravel() for g in mesh], axis=-1)
    centers = center + local @ u.T
    bound = (2 * d) ** d * math.exp(
        np.log(alpha[:k]).sum() - k * math.log(ak1)
    )
    return BallCover(
        centers=centers,
        radius=float(ak1 * r),
        word=(),
        certified_count_bound=float(bound),
        log_count_bound=float(math.log(bound)),
        base_count=centers.shape[0],
        base_radius=float(r),
    )


def _base_mesh(domain, r0):
    """Balls of radius ``r0`` covering the whole domain box."""
    d = domain.d
    side = 2.0 * r0 / math.sqrt(d)
    extents = domain.hi - domain.lo
    per_axis = np.maximum(np.ceil(extents / side - 1e-12), 1).astype(int)
    grids = [
        domain.lo[i] + (np.arange(per_axis[i]) + 0.5) * extents[i] / per_axis[i]
        for i in range(d)
    ]
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def _probe_r0(sys, samples=48, shrink_limit=20):
    """Largest radius at which the one-step ellipsoid enclosure validates.

    Checks directly, on a probe mesh, that each map sends a ball of radius
    r around a nearby point inside the image-frame ellipsoid of radius
    sqrt(d) r.  Affine maps pass at any radius; smooth perturbations force
    r down until the curvature fits in the sqrt(d) slack.
    """
    if sys.is_affine:
        return sys.domain.diameter / 4.0
    maps = sys.maps if sys.kind == "ifs" else list(sys.branches.values())
    d = sys.d
    rng = np.random.default_rng(1)
    anchors = sys.domain.lo + rng.random((samples, d)) * (sys.domain.hi - sys.domain.lo)
    r0 = sys.domain.diameter / 4.0
    for _ in range(shrink_limit):
        ok = True
        for fmap in maps:
            jac = fmap.jacobian(anchors)
            inv = np.linalg.inv(jac)
            offsets = rng.normal(size=(8, d))
            offsets /= np.linalg.norm(offsets, axis=1, keepdims=True)
            for off in offsets:
                z = np.clip(anchors + 0.9 * r0 * off, sys.domain.lo, sys.domain.hi)
                x = np.clip(z + r0 * off, sys.domain.lo, sys.domain.hi)
                lhs = np.einsum("nij,nj->ni", inv, fmap(x) - fmap(z))
                need = np.linalg.norm(x - z, axis=1) * math.sqrt(d)
                if (np.linalg.norm(lhs, axis=1) > need + 1e-12).any():
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return r0
        r0 /= 2.0
    raise ValueError("no validating base radius found; maps are too curved")


def cover_word(sys, word, k, r0=None, prune=True):
    """Certified ball cover of the word's piece of the invariant set.

    Built recursively from the word's tail: the cover of the suffix piece is
    mapped through the head map and every image ball is re-covered via
    ``ellipsoid_cover`` with the Jacobian taken at the suffix's coding
    point.  Radii contract by the per-step (k+1)-st singular values; counts
    are bounded by the base count times the per-step factors.  Balls that
    provably miss the piece (outside its certified circumball) are dropped,
    which never affects validity.
    """
    word = tuple(int(s) for s in word)
    sys.subshift.require_admissible(word)
    if not 0 <= k <= sys.d - 1:
        raise ValueError(f"k must be in 0..{sys.d - 1}, got {k}")
    if r0 is None:
        r0 = _probe_r0(sys)
    centers = _base_mesh(sys.domain, r0)
    base_count = centers.shape[0]
    radius = float(r0)
    log_g = 0.0
    d = sys.d
    log_c = d * math.log(2 * d)

    steps = sys.steps_per_word(len(word))
    piece_center = sys.domain.center
    piece_circ = sys.domain.diameter / 2.0
    for pos in range(steps - 1, -1, -1):
        fmap = sys.map_for_step(word, pos)
        suffix = word[pos + 1 :]
        if sys.steps_per_word(len(suffix)) >= 1:
            y = batched_code_points(sys, np.array([suffix]))[0]
        else:
            y = sys.domain.center
        jac = fmap.jacobian(y)
        sub = ellipsoid_cover(jac, np.zeros(d), radius, k)
        # Compose: image of each retained center plus the local cover offsets.
        images = fmap(centers)
        centers = (images[:, None, :] + sub.centers[None, :, :]).reshape(-1, d)
        radius = sub.radius
        log_g += math.log(sub.certified_count_bound)
        piece_center = fmap(piece_center)
        piece_circ *= fmap.gamma
        if prune:
            keep = (
                np.linalg.norm(centers - piece_center, axis=1)
                <= radius + piece_circ + 1e-12
            )
            centers = centers[keep]

    log_bound = math.log(base_count) + log_g
    bound = math.exp(log_bound) if log_bound < 700 else math.inf
    return BallCover(
        centers=centers,
        radius=radius,
        word=word,
        certified_count_bound=float(bound),
        log_count_bound=float(log_bound),
        base_count=base_count,
        base_radius=float(r0),
    )


def verify_cover(cover, cloud, slack=0.0):
    """Fraction of cloud points inside the union of the cover's balls.

    ``slack`` widens every radius, typically by the chaos-game error bound
    of the cloud.
    """
    pts = np.atleast_2d(np.asarray(cloud, dtype=float))
    tree = cKDTree(cover.centers)
    dist, _ = tree.query(pts)
    return float((dist <= cover.radius + slack).mean())


def box_count(cloud, delta, origin=None, threads=1):
    """Occupied cells of the axis-aligned grid of mesh ``delta``.

    The grid is anchored at ``origin`` (the domain corner; zero by
    default), so repeated calls are deterministic.
    """
    pts = np.atleast_2d(np.asarray(cloud, dtype=float))
    if delta <= 0:
        raise ValueError("delta must be positive")
    if origin is None:
        origin = np.zeros(pts.shape[1])
    cells = np.floor((pts - origin) / delta).astype(np.int64)
    lo = cells.min(axis=0)
    cells -= lo
    spans = cells.max(axis=0) + 1
    if np.prod(spans.astype(float)) < 2**62:
        mults = np.cumprod(np.concatenate([[1], spans[:-1]]))
        keys = cells @ mults
        if threads > 1:
            chunks = np.array_split(keys, threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                uniques = list(pool.map(np.unique, chunks))
            merged = uniques[0]
            for u in uniques[1:]:
                merged = np.union1d(merged, u)
            return int(merged.size)
        return int(np.unique(keys).size)
    return int(np.unique(cells, axis=0).shape[0])


@dataclass(frozen=True)
class BoxCountSeries:
    """Occupancy counts over a shrinking mesh ladder and the fitted slope."""

    entries: tuple
    slope: float
    fit_window: tuple
    residual: float


def box_dimension(
    cloud, delta_grid, origin=None, resolution=None, drop_largest=1, drop_smallest=2, threads=1
):
    """Least-squares box-dimension estimate of a sampled set.

    Fits log N against log(1/delta) after discarding the coarsest mesh and
    the two finest ones (fixed window policy, reported in the result).
    ``resolution`` is the cloud's geometric error bound; the finest mesh
    must stay a factor of 10 above it.
    """
    deltas = np.sort(np.asarray(delta_grid, dtype=float))[::-1]
    if deltas.size < drop_largest + drop_smallest + 2:
        raise ValueError("delta grid too short for the fit window")
    if resolution is not None and deltas[-1] < 10.0 * resolution:
        raise InsufficientResolutionError(
            f"finest mesh {deltas[-1]:.3g} below 10x the cloud resolution {resolution:.3g}"
        )
    counts = np.array(
        [box_count(cloud, d, origin=origin, threads=threads) for d in deltas]
    )
    if (np.diff(counts) < 0).any():
        raise AssertionError("box counts must not decrease as the mesh shrinks")
    lo, hi = drop_largest, deltas.size - drop_smallest
    x = np.log(1.0 / deltas[lo:hi])
    y = np.log(counts[lo:hi])
    coef = np.polyfit(x, y, 1)
    fit = np.polyval(coef, x)
    residual = float(np.sqrt(np.mean((y - fit) ** 2)))
    entries = tuple((float(d), int(c)) for d, c in zip(deltas, counts))
    return BoxCountSeries(
        entries=entries,
        slope=float(coef[0]),
        fit_window=(lo, hi),
        residual=residual,
    )
