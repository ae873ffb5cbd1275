"""Empirical Palm mark distribution and its asymptotic covariance estimators.

Notation used throughout: for a pattern of ``n`` points in a window ``W``
with bin set ``C_1..C_ell`` and hypothesized bin probabilities ``p0``,

* ``u_i(p) = 1{mark_p in C_i} - p0_i`` is the centered bin indicator,
* ``gamma(y) = |W cap (W - y)|`` is the set covariance of the window.

Three covariance estimators are provided: the edge-corrected one (pair sum
weighted by ``1/gamma``, unbiased), the naive one (pair sum weighted by
``1/|W|``, asymptotically unbiased, evaluated in O(n) through an algebraic
identity), and the smoothed one (edge-corrected pair sum windowed by a
compactly supported kernel of the pair distance, mean-square consistent).
Patterns are assumed pre-clipped: every point lies in the interior of the
window, so all ``gamma`` denominators are strictly positive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .geometry import DIM, ObservationWindow, set_covariance
from .marks import AngularBinSet, HypotheticalMarkLaw
from .models import MarkedPointPattern, realize
from .rng import child_seed

# Cap on pairs handled per vectorized block of the pair sums.
_BLOCK = 1 << 18


class EmptyPatternError(ValueError):
    """Raised when an operation needs at least one point in the window."""


class BandwidthConditionWarning(UserWarning):
    """The finite-sample kernel bandwidth bound is violated (asymptotic only)."""


@dataclass(frozen=True)
class PalmEstimate:
    """Empirical intensity and empirical Palm mark bin probabilities."""

    lambda_hat: float
    p_hat: np.ndarray
    n_in_window: int
    n_binned: int


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric kernel with ``w(0) = 1``, bounded by ``m_w``, support ``[-r_w, r_w]``."""

    shape: str = "box"
    r_w: float = 1.0
    m_w: float = 1.0

    def __post_init__(self):
        if self.shape not in ("box", "epanechnikov"):
            raise ValueError("kernel shape must be 'box' or 'epanechnikov'")
        if self.r_w <= 0:
            raise ValueError("kernel support radius must be positive")
        if self.m_w < 1.0:
            raise ValueError("kernel bound must be at least w(0) = 1")

    def weights(self, x: np.ndarray) -> np.ndarray:
        x = np.abs(np.asarray(x, dtype=float))
        if self.shape == "box":
            return np.where(x <= self.r_w, 1.0, 0.0)
        t = x / self.r_w
        return np.maximum(1.0 - t * t, 0.0)


@dataclass(frozen=True)
class Bandwidth:
    """Bandwidth record ``b_k = c * |W|^(-3/(4 d))`` with rescaled ``a_k``."""

    c: float
    b_k: float
    a_k: float
    wb_ok: bool


@dataclass(frozen=True)
class CovarianceEstimate:
    """Symmetric covariance matrix estimate plus provenance."""

    matrix: np.ndarray
    estimator: str  # analytic | s1 | s2 | s3 | monte-carlo
    bandwidth: Bandwidth | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance matrix must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("covariance matrix must be exactly symmetric")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def ell(self) -> int:
        return self.matrix.shape[0]


def palm_estimate(pattern: MarkedPointPattern, window: ObservationWindow,
                  bins: AngularBinSet) -> PalmEstimate:
    """Empirical intensity and bin frequencies of the mark distribution.

    ``lambda_hat = n / |W|`` and ``p_hat_i`` is the fraction of points whose
    mark falls in bin ``i``.  Raises :class:`EmptyPatternError` for an empty
    pattern; callers treat that replication as invalid.
    """
    n = len(pattern)
    if n == 0:
        raise EmptyPatternError("no points in window, Palm estimate undefined")
    idx = bins.indices(pattern.marks)
    counts = np.bincount(idx[idx >= 0], minlength=bins.ell)
    return PalmEstimate(lambda_hat=n / window.volume(),
                        p_hat=counts / n,
                        n_in_window=n,
                        n_binned=int(counts.sum()))


def deviation_vector(pattern: MarkedPointPattern, window: ObservationWindow,
                     bins: AngularBinSet, p0: HypotheticalMarkLaw) -> np.ndarray:
    """Scaled deviations of the empirical bin frequencies from ``p0``.

    ``y_i = (1/sqrt(|W|)) * sum_p (1{mark_p in C_i} - p0_i)``, a single pass
    over the pattern.  An empty pattern gives the zero vector.
    """
    idx = bins.indices(pattern.marks)
    counts = np.bincount(idx[idx >= 0], minlength=bins.ell).astype(float)
    return (counts - len(pattern) * p0.probs) / np.sqrt(window.volume())


def analytic_independent_covariance(intensity: float,
                                    p0: HypotheticalMarkLaw) -> CovarianceEstimate:
    """Closed-form covariance under independent marking with disjoint bins.

    ``sigma_ii = lam * p_i (1 - p_i)`` and ``sigma_ij = -lam * p_i p_j`` for
    ``i != j``.  Serves as the oracle for the estimator tests.
    """
    p = p0.probs
    m = intensity * (np.diag(p) - np.outer(p, p))
    return CovarianceEstimate(m, "analytic")


def bandwidth(c: float, window: ObservationWindow,
              kernel: KernelSpec = KernelSpec()) -> Bandwidth:
    """Bandwidth ``b_k = c |W|^(-3/(4 d))`` and its window rescaling ``a_k``.

    ``wb_ok`` records whether the finite-sample bound
    ``inball_radius / (2 d r_w |W|^(1/d)) >= b_k`` holds; a violation only
    warns because the condition is asymptotic and small windows break it by
    construction.
    """
    if c <= 0:
        raise ValueError("bandwidth constant c must be positive")
    vol = window.volume()
    b_k = c * vol ** (-3.0 / (4.0 * DIM))
    a_k = b_k * vol ** (1.0 / DIM)
    bound = window.inball_radius() / (2.0 * DIM * kernel.r_w * vol ** (1.0 / DIM))
    wb_ok = bound >= b_k
    if not wb_ok:
        warnings.warn("bandwidth violates the finite-sample kernel condition",
                      BandwidthConditionWarning, stacklevel=2)
    return Bandwidth(c=float(c), b_k=float(b_k), a_k=float(a_k), wb_ok=bool(wb_ok))


def _centered_indicators(marks, bins, p0):
    """Matrix ``u[p, i] = 1{mark_p in C_i} - p0_i`` and the bin counts."""
    idx = bins.indices(marks)
    n = len(idx)
    u = np.repeat(-p0.probs[None, :], n, axis=0)
    binned = np.flatnonzero(idx >= 0)
    u[binned, idx[binned]] += 1.0
    counts = np.bincount(idx[binned], minlength=bins.ell)
    return u, counts


def _diag_term(counts, n, p0, volume):
    """Single-point term ``(1/|W|) sum_p (1{C_i cap C_j} - p0_i p0_j)``."""
    return (np.diag(counts.astype(float)) - n * np.outer(p0, p0)) / volume


def _mirror_upper(m):
    """Exactly symmetric copy built from the upper triangle."""
    return np.triu(m) + np.triu(m, 1).T


def _block_pairs_cross(a, b):
    rows = max(1, _BLOCK // max(1, len(b)))
    for i in range(0, len(a), rows):
        aa = a[i:i + rows]
        yield np.repeat(aa, len(b)), np.tile(b, len(aa))


def _block_pairs_within(members):
    m = len(members)
    if m < 2:
        return
    step = max(1, int(_BLOCK ** 0.5))
    chunks = [members[i:i + step] for i in range(0, m, step)]
    for ci, a in enumerate(chunks):
        ii, jj = np.triu_indices(len(a), k=1)
        if len(ii):
            yield a[ii], a[jj]
        for b in chunks[ci + 1:]:
            yield from _block_pairs_cross(a, b)


def _iter_pair_blocks(points, cell_size):
    """Index blocks ``(ia, ib)`` covering each unordered point pair once.

    With finite ``cell_size``, points are hashed onto a uniform grid of that
    cell size and only pairs from the same or adjacent cells are produced,
    which covers every pair at distance up to ``cell_size``.  ``None`` yields
    all pairs.  The enumeration order is deterministic for fixed input.
    """
    n = len(points)
    if n < 2:
        return
    if cell_size is None:
        yield from _block_pairs_within(np.arange(n))
        return
    base = points.min(axis=0)
    cx = np.floor((points[:, 0] - base[0]) / cell_size).astype(np.int64)
    cy = np.floor((points[:, 1] - base[1]) / cell_size).astype(np.int64)
    stride = int(cy.max()) + 2
    key = cx * stride + cy
    order = np.argsort(key, kind="stable")
    sorted_key = key[order]
    starts = np.flatnonzero(np.r_[True, sorted_key[1:] != sorted_key[:-1]])
    ends = np.append(starts[1:], n)
    cells = {int(sorted_key[s]): (s, e) for s, e in zip(starts, ends)}
    for s, e in zip(starts, ends):
        members = order[s:e]
        yield from _block_pairs_within(members)
        kx, ky = divmod(int(sorted_key[s]), stride)
        for dx, dy in ((0, 1), (1, -1), (1, 0), (1, 1)):
            span = cells.get((kx + dx) * stride + (ky + dy))
            if span is not None:
                yield from _block_pairs_cross(members, order[span[0]:span[1]])


def _pair_term(points, u, window, kernel, a_k):
    """Symmetrized kernel-weighted pair sum of the edge-corrected estimators.

    Accumulates ``sum over unordered pairs {p,q}`` of
    ``(u_p u_q^T + u_q u_p^T) * w(d_pq / a_k) / gamma(x_q - x_p)``.
    ``a_k = inf`` makes every weight ``w(0) = 1`` (the unsmoothed pair sum).
    Enumeration is restricted to a uniform grid of cell size ``a_k * r_w``
    whenever that cutoff is smaller than the pattern's bounding-box diagonal.
    """
    ell = u.shape[1]
    m = np.zeros((ell, ell))
    n = len(points)
    if n >= 2:
        cutoff = a_k * kernel.r_w
        extent = points.max(axis=0) - points.min(axis=0)
        if np.isfinite(cutoff) and cutoff ** 2 < extent @ extent:
            cell_size = cutoff * (1.0 + 1e-9)  # never drop a boundary pair
        else:
            cell_size = None
        for ia, ib in _iter_pair_blocks(points, cell_size):
            diff = points[ib] - points[ia]
            w = kernel.weights(np.hypot(diff[:, 0], diff[:, 1]) / a_k)
            keep = w > 0
            if not np.any(keep):
                continue
            ia, ib, diff = ia[keep], ib[keep], diff[keep]
            z = w[keep] / set_covariance(window, diff)
            m += (u[ia] * z[:, None]).T @ u[ib]
    return m + m.T


def edge_corrected_covariance(pattern: MarkedPointPattern, window: ObservationWindow,
                              bins: AngularBinSet,
                              p0: HypotheticalMarkLaw) -> CovarianceEstimate:
    """Unbiased covariance estimator with set-covariance edge correction.

    Single-point term plus the pair sum over distinct points weighted by
    ``1 / gamma(x_q - x_p)``.  O(n^2); use the smoothed estimator for large
    patterns when consistency matters.
    """
    u, counts = _centered_indicators(pattern.marks, bins, p0)
    m = _diag_term(counts, len(pattern), p0.probs, window.volume())
    m = m + _pair_term(pattern.points, u, window, KernelSpec("box"), np.inf)
    return CovarianceEstimate(m, "s1")


def naive_covariance(pattern: MarkedPointPattern, window: ObservationWindow,
                     bins: AngularBinSet,
                     p0: HypotheticalMarkLaw) -> CovarianceEstimate:
    """Asymptotically unbiased estimator without edge correction, in O(n).

    The pair sum with constant weight ``1/|W|`` collapses algebraically:
    ``sum_{p != q} u_i(p) u_j(q) = S_i S_j - sum_p u_i(p) u_j(p)`` with
    ``S_i = sum_p u_i(p)``, so no pair enumeration is needed.
    """
    u, counts = _centered_indicators(pattern.marks, bins, p0)
    s = u.sum(axis=0)
    pair = (np.outer(s, s) - _mirror_upper(u.T @ u)) / window.volume()
    m = _diag_term(counts, len(pattern), p0.probs, window.volume()) + pair
    return CovarianceEstimate(m, "s2")


def smoothed_covariance(pattern: MarkedPointPattern, window: ObservationWindow,
                        bins: AngularBinSet, p0: HypotheticalMarkLaw,
                        kernel: KernelSpec = KernelSpec(),
                        c: float = 50.0) -> CovarianceEstimate:
    """Kernel-smoothed edge-corrected estimator (the mean-square consistent one).

    Equals the edge-corrected pair sum with each pair additionally weighted
    by ``w(d_pq / a_k)``, so pairs farther apart than ``a_k * r_w``
    contribute nothing and the pair sum is evaluated on a uniform spatial
    grid of that cell size.
    """
    return smoothed_covariance_curve(pattern, window, bins, p0, kernel, (c,))[0]


def smoothed_covariance_curve(pattern: MarkedPointPattern, window: ObservationWindow,
                              bins: AngularBinSet, p0: HypotheticalMarkLaw,
                              kernel: KernelSpec,
                              cs: tuple[float, ...]) -> list[CovarianceEstimate]:
    """Smoothed estimator at several bandwidth constants, one pair pass.

    Candidate pairs are enumerated once at the widest cutoff; each bandwidth
    then reweights them.  Returns one estimate per entry of ``cs`` in order.
    """
    bws = [bandwidth(c, window, kernel) for c in cs]
    u, counts = _centered_indicators(pattern.marks, bins, p0)
    diag = _diag_term(counts, len(pattern), p0.probs, window.volume())
    n = len(pattern)
    mats = [np.zeros((bins.ell, bins.ell)) for _ in bws]
    if n >= 2:
        widest = max(bw.a_k for bw in bws) * kernel.r_w
        extent = pattern.points.max(axis=0) - pattern.points.min(axis=0)
        if np.isfinite(widest) and widest ** 2 < extent @ extent:
            cell_size = widest * (1.0 + 1e-9)
        else:
            cell_size = None
        points = pattern.points
        for ia, ib in _iter_pair_blocks(points, cell_size):
            diff = points[ib] - points[ia]
            dist = np.hypot(diff[:, 0], diff[:, 1])
            gamma = set_covariance(window, diff)
            for m, bw in zip(mats, bws):
                w = kernel.weights(dist / bw.a_k)
                keep = w > 0
                if not np.any(keep):
                    continue
                z = w[keep] / gamma[keep]
                m += (u[ia[keep]] * z[:, None]).T @ u[ib[keep]]
    return [CovarianceEstimate(diag + (m + m.T), "s3", bandwidth=bw)
            for m, bw in zip(mats, bws)]


def monte_carlo_covariance(config, n_reps: int, bins: AngularBinSet,
                           p0: HypotheticalMarkLaw, n_jobs: int = 1) -> CovarianceEstimate:
    """Entrywise mean of the naive estimator over model replications.

    Realizations use independent substreams derived from ``config.seed``, so
    the result is deterministic for a fixed master seed regardless of the
    parallelism degree (the reduction runs in replication order).  A
    zero-point realization contributes its well-defined zero matrix.
    """
    if n_reps < 1:
        raise ValueError("need at least one replication")

    def one(seed):
        pattern = realize(replace(config, seed=seed))
        return naive_covariance(pattern, config.window, bins, p0).matrix

    seeds = [child_seed(config.seed, "mc-sigma", r) for r in range(n_reps)]
    if n_jobs == 1:
        mats = [one(s) for s in seeds]
    else:
        mats = Parallel(n_jobs=n_jobs)(delayed(one)(s) for s in seeds)
    total = np.zeros((bins.ell, bins.ell))
    for m in mats:
        total += m
    return CovarianceEstimate(total / n_reps, "monte-carlo")
