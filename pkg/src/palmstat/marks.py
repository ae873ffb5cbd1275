"""Directional marks, angular test bins, and projected-normal bin probabilities.

Axial marks are directions identified with their antipode, stored as angles
in ``[0, pi)``.  The test bins split the mark space into ``ell + 1`` equal
sectors of which only the first ``ell`` are used; the leftover sector keeps
the bin indicators linearly independent so the covariance matrix of the bin
counts stays invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson


@dataclass(frozen=True)
class AngularBinSet:
    """``ell`` half-open angular bins of width ``full_span / (ell + 1)``.

    Bin ``i`` (0-based) is ``[i * width, (i + 1) * width)``.  Angles in the
    final, unused sector ``[ell * width, full_span)`` belong to no bin.
    ``full_span`` is ``pi`` for axial marks and ``2 pi`` for circular ones.
    """

    ell: int
    full_span: float = np.pi

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("need at least one bin")
        if not 0 < self.full_span <= 2 * np.pi + 1e-12:
            raise ValueError("full_span must lie in (0, 2*pi]")

    @property
    def width(self) -> float:
        return self.full_span / (self.ell + 1)

    @property
    def covered_span(self) -> float:
        return self.ell * self.width

    @property
    def edges(self) -> np.ndarray:
        """The ``ell + 1`` bin edges ``0, width, ..., ell * width``."""
        return np.arange(self.ell + 1) * self.width

    def indices(self, thetas: np.ndarray) -> np.ndarray:
        """Bin index per angle (0-based); ``-1`` marks the unused sector."""
        t = np.asarray(thetas, dtype=float)
        if np.any(t < 0) or np.any(t >= self.full_span):
            raise ValueError("angles must lie in [0, full_span)")
        idx = np.floor(t / self.width).astype(np.int64)
        return np.where(idx >= self.ell, -1, idx)

    def index_of(self, theta: float) -> int | None:
        """Scalar version of :meth:`indices`; ``None`` for the unused sector."""
        idx = int(self.indices(np.asarray([theta]))[0])
        return None if idx < 0 else idx


@dataclass(frozen=True)
class HypotheticalMarkLaw:
    """Hypothesized bin probabilities of the mark distribution under test."""

    probs: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("probs must be a nonempty vector")
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValueError("each bin probability must lie in (0, 1)")
        if p.sum() > 1 + 1e-12:
            raise ValueError("bin probabilities must sum to at most 1")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def ell(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class GaussCovariance2:
    """Invertible 2x2 covariance matrix of the latent Gaussian directions."""

    kappa11: float = 1.0
    kappa22: float = 1.0
    kappa12: float = 0.0

    def __post_init__(self):
        if self.kappa11 <= 0 or self.kappa22 <= 0 or self.det <= 0:
            raise ValueError("covariance matrix must be positive definite")

    @property
    def det(self) -> float:
        return self.kappa11 * self.kappa22 - self.kappa12 ** 2

    def matrix(self) -> np.ndarray:
        return np.array([[self.kappa11, self.kappa12],
                         [self.kappa12, self.kappa22]])

    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(self.matrix())


def axial_fold(vectors: np.ndarray) -> np.ndarray:
    """Fold unit vectors onto the upper half circle, returning angles in [0, pi).

    Vectors pointing into the lower half circle are replaced by their
    antipodes, so ``v`` and ``-v`` map to the same angle.  Both horizontal
    directions map to angle 0.

    Parameters
    ----------
    vectors : array_like, shape (..., 2)
        Unit vectors (within 1e-9).

    Returns
    -------
    ndarray or float
        Folded angles, one per input vector.
    """
    v = np.asarray(vectors, dtype=float)
    norms = np.hypot(v[..., 0], v[..., 1])
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("axial_fold expects unit vectors")
    flip = v[..., 1] < 0
    x = np.where(flip, -v[..., 0], v[..., 0])
    y = np.where(flip, -v[..., 1], v[..., 1])
    theta = np.arctan2(y, x)
    # y == 0 now means a horizontal direction: atan2 gives 0 or pi, both axial 0.
    theta = np.where(y == 0, 0.0, theta)
    return float(theta) if theta.ndim == 0 else theta


def uniform_bin_probs(bins: AngularBinSet) -> HypotheticalMarkLaw:
    """Bin probabilities of the uniform mark distribution: ``1/(ell+1)`` each."""
    p = np.full(bins.ell, 1.0 / (bins.ell + 1))
    return HypotheticalMarkLaw(p, label="uniform")


def pn2_density(theta: np.ndarray, kappa: GaussCovariance2) -> np.ndarray:
    """Density on the circle of the direction of a centered Gaussian vector.

    For ``Z ~ N2(0, kappa)`` the angle of ``Z / ||Z||`` has density
    ``sqrt(det kappa) / (2 pi * q(theta))`` where
    ``q(theta) = k22 cos^2 - 2 k12 cos sin + k11 sin^2`` comes from the
    radial integral of the bivariate normal density.
    """
    t = np.asarray(theta, dtype=float)
    c, s = np.cos(t), np.sin(t)
    q = kappa.kappa22 * c * c - 2.0 * kappa.kappa12 * c * s + kappa.kappa11 * s * s
    return np.sqrt(kappa.det) / (2.0 * np.pi * q)


def axial_pn2_bin_probs(kappa: GaussCovariance2, bins: AngularBinSet,
                        grid: int = 4096) -> HypotheticalMarkLaw:
    """Bin probabilities of the axially folded projected normal distribution.

    Integrates the folded density ``f(theta) + f(theta + pi)`` over each bin
    with composite Simpson quadrature on ``grid`` subintervals per sector.
    The probabilities over all ``ell + 1`` sectors are checked to sum to one
    within 1e-8.

    Parameters
    ----------
    kappa : GaussCovariance2
        Covariance of the latent Gaussian vector (must be invertible).
    bins : AngularBinSet
        Axial bins (``full_span == pi``).
    grid : int
        Simpson subintervals per sector, at least 1000.
    """
    if grid < 1000:
        raise ValueError("integration resolution must be at least 1000")
    if abs(bins.full_span - np.pi) > 1e-12:
        raise ValueError("projected-normal bin probabilities require axial bins")
    nsub = grid + (grid % 2)  # Simpson needs an even subinterval count
    sector = np.empty(bins.ell + 1)
    for i in range(bins.ell + 1):
        t = np.linspace(i * bins.width, (i + 1) * bins.width, nsub + 1)
        folded = pn2_density(t, kappa) + pn2_density(t + np.pi, kappa)
        sector[i] = simpson(folded, x=t)
    if abs(sector.sum() - 1.0) > 1e-8:
        raise RuntimeError("quadrature failed to integrate the density to 1")
    return HypotheticalMarkLaw(sector[:bins.ell],
                               label=f"axial-pn2(k12={kappa.kappa12:g})")
