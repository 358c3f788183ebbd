"""Invariant measures on shifts, their entropy, Lyapunov exponents of the
Jacobian cocycle, Lyapunov dimension, and local-dimension estimation for
push-forward measures."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InsufficientResolutionError, MeasureSupportError
from .singular import product_spectrum


class ShiftMeasure:
    """Bernoulli or Markov measure on a shift space.

    Markov measures carry a row-stochastic matrix ``P`` and its stationary
    vector ``pi`` (computed when not supplied).
    """

    def __init__(self, kind, p=None, P=None, pi=None):
        self.kind = kind
        if kind == "bernoulli":
            p = np.asarray(p, dtype=float)
            if p.ndim != 1 or (p < 0).any():
                raise ValueError("probabilities must be a nonnegative vector")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
            self.p = p
            self.ell = p.size
        elif kind == "markov":
            P = np.asarray(P, dtype=float)
            if P.ndim != 2 or P.shape[0] != P.shape[1] or (P < 0).any():
                raise ValueError("transition matrix must be square and nonnegative")
            if np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
                raise ValueError("transition matrix rows must sum to 1")
            self.P = P
            self.ell = P.shape[0]
            self.pi = _stationary(P) if pi is None else np.asarray(pi, dtype=float)
            if np.abs(self.pi @ P - self.pi).max() > 1e-10:
                raise ValueError("pi is not stationary for P")
            if abs(self.pi.sum() - 1.0) > 1e-10 or (self.pi < -1e-12).any():
                raise ValueError("pi must be a probability vector")
        else:
            raise ValueError(f"unknown measure kind {kind!r}")

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", p=p)

    @classmethod
    def markov(cls, P, pi=None):
        return cls("markov", P=P, pi=pi)

    @classmethod
    def uniform(cls, subshift):
        """Maximal-symmetry measure: uniform Bernoulli on a full shift,
        row-uniform Markov on an SFT."""
        if subshift.is_full:
            return cls.bernoulli(np.full(subshift.ell, 1.0 / subshift.ell))
        a = subshift.transfer.astype(float)
        return cls.markov(a / a.sum(axis=1, keepdims=True))

    def check_support(self, subshift):
        if self.ell != subshift.ell:
            raise MeasureSupportError(
                f"measure on {self.ell} symbols, shift on {subshift.ell}"
            )
        if subshift.is_full:
            return
        a = subshift.transfer
        if self.kind == "bernoulli":
            # A Bernoulli measure charges every transition between its
            # charged symbols.
            charged = np.flatnonzero(self.p > 0)
            if not a[np.ix_(charged, charged)].all():
                raise MeasureSupportError(
                    "Bernoulli measure charges transitions the SFT forbids"
                )
        else:
            if ((self.P > 0) & (a == 0)).any():
                raise MeasureSupportError(
                    "Markov measure charges transitions the SFT forbids"
                )

    def sample_words(self, rng, count, length, start_state=None):
        """Draw ``count`` words of the given length, one per row."""
        if self.kind == "bernoulli":
            return rng.choice(self.ell, size=(count, length), p=self.p).astype(np.int64)
        cum = np.cumsum(self.P, axis=1)
        cum /= cum[:, -1:]
        out = np.empty((count, length), dtype=np.int64)
        if start_state is None:
            start_cum = np.cumsum(self.pi)
            start_cum /= start_cum[-1]
            out[:, 0] = np.searchsorted(start_cum, rng.random(count), side="right")
        else:
            row = cum[start_state]
            out[:, 0] = np.searchsorted(row, rng.random(count), side="right")
        for t in range(1, length):
            u = rng.random(count)
            out[:, t] = (u[:, None] > cum[out[:, t - 1]]).sum(axis=1)
        return out


def _stationary(P):
    vals, vecs = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, idx])
    pi = np.clip(pi / pi.sum(), 0.0, None)
    return pi / pi.sum()


def entropy(m):
    """Entropy rate in nats per symbol; 0 log 0 reads as 0."""
    if m.kind == "bernoulli":
        p = m.p[m.p > 0]
        return float(-(p * np.log(p)).sum())
    rows = []
    for i in range(m.ell):
        p = m.P[i][m.P[i] > 0]
        rows.append(-(p * np.log(p)).sum())
    return float(np.dot(m.pi, rows))


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Per-direction exponents of the Jacobian cocycle, descending, in nats
    per symbol, with 95% confidence half-widths from batch means."""

    lam: np.ndarray
    ci_half_width: np.ndarray
    n_orbit: int
    n_samples: int


def lyapunov_exponents(sys, m, n_orbit=200, n_samples=64, seed=0):
    """Monte Carlo estimate of the Lyapunov exponents under ``m``.

    Words of length ``n_orbit`` are sampled from the measure; each yields
    the log singular spectrum of its Jacobian product divided by the orbit
    length.  When all one-step Jacobians coincide the result is computed
    once and is exact with zero confidence width.
    """
    if n_orbit < 1 or n_samples < 1:
        raise ValueError("n_orbit and n_samples must be >= 1")
    m.check_support(sys.subshift)

    if sys.shared_linear is not None:
        steps = sys.steps_per_word(n_orbit if sys.kind == "ifs" else n_orbit + 1)
        lam = product_spectrum([sys.shared_linear] * steps) / steps
        zero = np.zeros_like(lam)
        return LyapunovSpectrum(lam, zero, n_orbit, n_samples)

    from .systems import batched_code_points, batched_log_spectra, tail_length

    extra = tail_length(sys)
    pair_pad = 1 if sys.kind == "repeller" else 0
    word_len = n_orbit + extra + pair_pad
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x1F)))
    words = m.sample_words(rng, n_samples, word_len)
    tails = batched_code_points(sys, words[:, n_orbit:])
    spectra = batched_log_spectra(sys, words[:, : n_orbit + pair_pad], tails)
    per_orbit = spectra / n_orbit
    lam = per_orbit.mean(axis=0)
    sd = per_orbit.std(axis=0, ddof=1) if n_samples > 1 else np.zeros_like(lam)
    ci = 1.96 * sd / math.sqrt(n_samples)
    return LyapunovSpectrum(lam, ci, n_orbit, n_samples)


def lyapunov_dimension(h, lam):
    """Zero of ``s -> h + lam_1 + ... + lam_[s] + (s - [s]) lam_[s]+1``.

    Above ``s = d`` the defining function continues as ``h + (s/d) sum(lam)``,
    giving ``d h / (-sum(lam))`` there.  Closed form per linear segment.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.size
    if h < 0:
        raise ValueError(f"entropy must be >= 0, got {h}")
    if (lam >= 0).any():
        raise ValueError("all exponents must be negative for a contracting system")
    if (np.diff(lam) > 1e-12).any():
        raise ValueError("exponents must be non-increasing")
    if h == 0.0:
        return 0.0
    total = lam.sum()
    if h + total >= 0:
        return float(d * h / (-total))
    partial = 0.0
    for k in range(d):
        nxt = partial + lam[k]
        if h + nxt < 0:
            return float(k + (h + partial) / (-lam[k]))
        partial = nxt
    raise AssertionError("unreachable: root must lie in some segment")


@dataclass(frozen=True)
class LocalDims:
    """Per-probe local-dimension slopes and their high quantile."""

    slopes: np.ndarray
    estimate: float
    quantile: float
    fit_r_min: float
    fit_r_max: float
    probe_indices: np.ndarray


def local_dims(cloud, r_grid, q=0.99, n_probes=4096, resolution=None, seed=0):
    """Upper local dimensions of the empirical measure of a point cloud.

    For each probe point the slope of log(mass of the ball B(x, r)) against
    log r is fitted over the radii where counts are informative (small-count
    and saturated radii are excluded).  The ``q`` quantile of the slopes
    estimates the essential supremum, i.e. the packing dimension of the
    sampled measure.
    """
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("cloud must be a (n, d) array with n >= 2")
    radii = np.sort(np.asarray(r_grid, dtype=float))
    if (radii <= 0).any():
        raise ValueError("radii must be positive")
    if resolution is not None and radii[0] < 10.0 * resolution:
        raise InsufficientResolutionError(
            f"min radius {radii[0]:.3g} below 10x the cloud resolution {resolution:.3g}"
        )
    n = pts.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x10ca1)))
    if n > n_probes:
        probe_idx = np.sort(rng.choice(n, size=n_probes, replace=False))
    else:
        probe_idx = np.arange(n)
    probes = pts[probe_idx]

    tree = cKDTree(pts)
    counts = np.empty((probes.shape[0], radii.size))
    for j, r in enumerate(radii):
        counts[:, j] = tree.query_ball_point(probes, r, return_length=True)
    masses = counts / n

    med_count = np.median(counts, axis=0)
    med_mass = np.median(masses, axis=0)
    # Radii with small counts make the per-point slopes too noisy for a
    # high-quantile summary; saturated radii flatten them.
    window = (med_count >= 256.0) & (med_mass <= 0.5)
    if window.sum() < 2:
        window = np.ones(radii.size, dtype=bool)
    x = np.log(radii[window])
    y = np.log(masses[:, window])
    xc = x - x.mean()
    denom = (xc ** 2).sum()
    slopes = (y * xc).sum(axis=1) / denom if denom > 0 else np.zeros(probes.shape[0])
    estimate = float(np.quantile(slopes, q))
    return LocalDims(
        slopes=slopes,
        estimate=estimate,
        quantile=q,
        fit_r_min=float(radii[window][0]),
        fit_r_max=float(radii[window][-1]),
        probe_indices=probe_idx,
    )
