"""Axis-aligned observation windows and their set covariance.

Rectangular windows admit a closed-form set covariance, which keeps the
denominators of the edge-corrected covariance estimators exact and cheap.
Everything here is pure and operates on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Spatial dimension of the plane.  Kept symbolic so the bandwidth and
# inequality formulas read the same way they would in general dimension.
DIM = 2


@dataclass(frozen=True)
class ObservationWindow:
    """Axis-aligned rectangle ``[lower[0], upper[0]] x [lower[1], upper[1]]``."""

    lower: tuple[float, float]
    upper: tuple[float, float]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.asarray(self.lower).ravel())
        upper = tuple(float(v) for v in np.asarray(self.upper).ravel())
        if len(lower) != DIM or len(upper) != DIM:
            raise ValueError("window corners must be 2-vectors")
        if not all(math.isfinite(v) for v in lower + upper):
            raise ValueError("window corners must be finite")
        if not all(u > l for l, u in zip(lower, upper)):
            raise ValueError("window must have positive side lengths")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def centered_square(cls, side: float) -> "ObservationWindow":
        h = float(side) / 2.0
        return cls((-h, -h), (h, h))

    @property
    def side_lengths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    def inball_radius(self) -> float:
        return float(self.side_lengths.min()) / 2.0

    def surface_content(self) -> float:
        """Boundary length of the rectangle, ``2 (L1 + L2)``."""
        return 2.0 * float(self.side_lengths.sum())

    def dilate(self, r: float) -> "ObservationWindow":
        """Rectangle grown by ``r`` on every side (Minkowski sum with a square)."""
        if r < 0:
            raise ValueError("dilation radius must be nonnegative")
        lo = tuple(v - r for v in self.lower)
        hi = tuple(v + r for v in self.upper)
        return ObservationWindow(lo, hi)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the closed rectangle.

        ``points`` has shape ``(..., 2)``; the result drops the last axis.
        """
        pts = np.asarray(points, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the rectangle (0 inside)."""
        pts = np.asarray(points, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
        return np.hypot(gap[..., 0], gap[..., 1])

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` i.i.d. uniform points in the rectangle, shape ``(n, 2)``."""
        return rng.uniform(self.lower, self.upper, size=(int(n), DIM))


def set_covariance(window: ObservationWindow, lag: np.ndarray) -> np.ndarray:
    """Area of overlap of the window with its translate, ``|W cap (W - lag)|``.

    For a rectangle with side lengths ``L_i`` this is the product
    ``prod_i max(0, L_i - |lag_i|)``.  Symmetric in the sign of ``lag`` and
    equal to the window volume at lag zero.

    Parameters
    ----------
    window : ObservationWindow
    lag : array_like, shape (..., 2)
        One translation vector or a batch of them.

    Returns
    -------
    float or ndarray
        Overlap area per lag (scalar for a single lag).
    """
    d = np.abs(np.asarray(lag, dtype=float))
    sides = window.side_lengths
    out = np.prod(np.maximum(sides - d, 0.0), axis=-1)
    return float(out) if out.ndim == 0 else out


def window_for_expected_points(intensity: float, n: float) -> ObservationWindow:
    """Origin-centered square holding ``n`` expected points at this intensity.

    The side is ``sqrt(n / intensity)`` so that ``intensity * volume == n``
    exactly.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    if n < 1:
        raise ValueError("expected point count must be at least 1")
    return ObservationWindow.centered_square(math.sqrt(n / intensity))


def check_covariance_inequalities(window: ObservationWindow, lag: np.ndarray) -> bool:
    """Check the two convex-geometry inequalities for a window/lag pair.

    For ``||lag|| <= inball_radius``:

    * ``1 - gamma(lag)/|W| <= DIM * ||lag|| / inball_radius``
    * ``1/inball_radius <= boundary_length/|W| <= DIM/inball_radius``

    Used by the property-test suite only.
    """
    lag = np.asarray(lag, dtype=float)
    rho = window.inball_radius()
    norm = float(np.hypot(lag[0], lag[1]))
    if norm > rho:
        raise ValueError("lag outside inball radius")
    vol = window.volume()
    deficit = 1.0 - set_covariance(window, lag) / vol
    first = deficit <= DIM * norm / rho + 1e-12
    ratio = window.surface_content() / vol
    second = (1.0 / rho) <= ratio + 1e-12 and ratio <= DIM / rho + 1e-12
    return bool(first and second)
