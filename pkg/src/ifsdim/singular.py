"""Singular values of small matrices and log-domain spectra of long products.

Everything here works in natural-log space.  A "spectrum" is a 1-D array of
log singular values in descending order; for products of hundreds of
contractions the raw singular values underflow doubles, the logs do not.
"""

import numpy as np

from .errors import NonFiniteError, SingularMatrixError

MAX_DIM = 8

# Largest log-range a single dense SVD can resolve before the small columns
# underflow double precision.
_DENSE_LOG_RANGE = 600.0

_DET_FLOOR = 1e-300


def _check_matrix(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"matrix dimension must be in 1..{MAX_DIM}, got {d}")
    if not np.isfinite(a).all():
        raise NonFiniteError("matrix has NaN or Inf entries")
    det = np.linalg.det(a)
    if abs(det) < _DET_FLOOR:
        raise SingularMatrixError(f"|det| = {abs(det):.3e} is below {_DET_FLOOR:g}")


def log_singular_values(mat):
    """Log singular values of a small invertible matrix, descending.

    Parameters
    ----------
    mat : (d, d) array_like
        Real matrix, d <= 8, finite entries, |det| above 1e-300.

    Returns
    -------
    (d,) ndarray
        Natural logs of the singular values, largest first.  Their sum
        equals log |det mat| up to rounding.
    """
    a = np.asarray(mat, dtype=float)
    _check_matrix(a)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 0.0:
        raise SingularMatrixError("matrix is numerically singular")
    return np.log(sv)


def log_svf(log_alpha, s):
    """Log of the singular value function at exponent ``s``.

    For 0 <= s <= d this interpolates partial products of singular values:
    alpha_1 * ... * alpha_k * alpha_{k+1}^(s-k) with k = floor(s).  Above d
    it continues as |det|^(s/d).  The result is continuous and piecewise
    linear in ``s`` with kinks exactly at the integers.

    Parameters
    ----------
    log_alpha : (d,) array_like
        Log singular values in descending order.
    s : float
        Exponent, must be >= 0.

    Returns
    -------
    float
    """
    la = np.asarray(log_alpha, dtype=float)
    d = la.size
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if s >= d:
        return float(s / d * la.sum())
    k = int(s)
    return float(la[:k].sum() + (s - k) * la[k])


def product_spectrum(mats, renorm_every=16):
    """Log singular spectrum of the ordered product ``mats[0] @ ... @ mats[-1]``.

    The dense product of a few hundred contractions underflows double
    precision, so it is never formed.  Factors are multiplied in blocks of
    ``renorm_every`` and folded into a running factorization
    (orthogonal) x (log-scaled diagonal); the final log singular values are
    read off the accumulated diagonal.  Exact to rounding at any length.

    Parameters
    ----------
    mats : sequence of (d, d) array_like
        Non-empty, all invertible, all the same dimension.
    renorm_every : int
        Block size between re-factorizations.

    Returns
    -------
    (d,) ndarray
        Log singular values of the product, descending.
    """
    if renorm_every < 1:
        raise ValueError(f"renorm_every must be >= 1, got {renorm_every}")
    mats = [np.asarray(m, dtype=float) for m in mats]
    if not mats:
        raise ValueError("cannot take the spectrum of an empty product")
    for m in mats:
        _check_matrix(m)
        if m.shape != mats[0].shape:
            raise ValueError("all factors must share the same dimension")
    d = mats[0].shape[0]

    u = np.eye(d)
    ld = np.zeros(d)
    # Accumulate right-to-left so each block lands on the orthogonal factor.
    n = len(mats)
    starts = list(range(0, n, renorm_every))
    for start in reversed(starts):
        block = mats[start:start + renorm_every]
        b = block[0]
        shift = 0.0
        for m in block[1:]:
            b = b @ m
            peak = np.abs(b).max()
            if not np.isfinite(peak) or peak == 0.0:
                raise SingularMatrixError("block product degenerated")
            if peak < 1e-120 or peak > 1e120:
                b = b / peak
                shift += np.log(peak)
        c = b @ u
        u, ld = _graded_svd_u(c, ld)
        ld += shift
    return ld


def _graded_svd_u(c, ld):
    """Left factor and log singular values of ``c @ diag(exp(ld))``.

    ``c`` must be well conditioned; ``ld`` may span an arbitrary range.
    Returns (u, logs) with logs descending.
    """
    order = np.argsort(-ld, kind="stable")
    u, ls = _graded_rec(c[:, order], ld[order])
    out = np.argsort(-ls, kind="stable")
    return u[:, out], ls[out]


def _graded_rec(c, ld):
    # ld descending.  When the range fits in a double, scale and go dense.
    if ld[0] - ld[-1] <= _DENSE_LOG_RANGE:
        shift = ld[0]
        mat = c * np.exp(ld - shift)[np.newaxis, :]
        uu, sv, _ = np.linalg.svd(mat, full_matrices=False)
        if sv[-1] <= 0.0:
            raise SingularMatrixError("product lost rank during accumulation")
        return uu, np.log(sv) + shift
    # Split at the widest gap: columns this far apart in scale decouple
    # below double-precision rounding (relative coupling ~ exp(-2 * gap)).
    g = int(np.argmax(ld[:-1] - ld[1:])) + 1
    qa, ra = np.linalg.qr(c[:, :g])
    u1, ls1 = _graded_rec(ra, ld[:g])
    rest = c[:, g:]
    rest_perp = rest - qa @ (qa.T @ rest)
    u2, ls2 = _graded_rec(rest_perp, ld[g:])
    return np.hstack([qa @ u1, u2]), np.concatenate([ls1, ls2])
