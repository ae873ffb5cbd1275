"""Seeded simulators for the marked point process models of the study.

Two models are provided:

* the moving-average model (MAM): homogeneous Poisson locations whose marks
  are axially folded directions of neighborhood sums of latent Gaussian
  vectors, with dependence range controlled by the averaging radius ``rho``;
* a Cox process on the boundary of a Boolean model of discs, marked with the
  outer normal direction at each boundary point.

All simulators are deterministic functions of their config's seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import ObservationWindow
from .marks import GaussCovariance2, axial_fold

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MarkedPointPattern:
    """Planar locations with one angular mark per point.

    Marks are radians in ``[0, pi)`` for axial directions or ``[0, 2 pi)``
    for circular ones; the bins applied downstream decide the span.
    """

    points: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 2))
        mks = np.ascontiguousarray(np.asarray(self.marks, dtype=float).ravel())
        if len(pts) != len(mks):
            raise ValueError("points and marks must have the same length")
        if pts.size and not (np.all(np.isfinite(pts)) and np.all(np.isfinite(mks))):
            raise ValueError("points and marks must be finite")
        pts.flags.writeable = False
        mks.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "marks", mks)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MamConfig:
    """Parameters of the moving-average model."""

    intensity: float
    rho: float
    kappa: GaussCovariance2
    window: ObservationWindow
    seed: int

    def __post_init__(self):
        if self.intensity <= 0:
            raise ValueError("intensity must be positive")
        if self.rho < 0:
            raise ValueError("averaging radius must be nonnegative")


@dataclass(frozen=True)
class BooleanCoxConfig:
    """Parameters of the Cox process on a Boolean model boundary.

    ``grain_radius`` is either a fixed radius or a ``(low, high)`` pair for a
    uniformly distributed bounded radius.
    """

    germ_intensity: float
    grain_radius: float | tuple[float, float]
    boundary_intensity: float
    window: ObservationWindow
    seed: int

    def __post_init__(self):
        if self.germ_intensity <= 0 or self.boundary_intensity <= 0:
            raise ValueError("intensities must be positive")
        r = self.grain_radius
        if isinstance(r, tuple):
            if not 0 < r[0] <= r[1]:
                raise ValueError("radius bounds must satisfy 0 < low <= high")
        elif r <= 0:
            raise ValueError("grain radius must be positive")

    @property
    def r_max(self) -> float:
        r = self.grain_radius
        return float(r[1] if isinstance(r, tuple) else r)

    def draw_radii(self, n: int, rng: np.random.Generator) -> np.ndarray:
        r = self.grain_radius
        if isinstance(r, tuple):
            return rng.uniform(r[0], r[1], size=n)
        return np.full(n, float(r))


def sample_poisson(window: ObservationWindow, intensity: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson locations in the window, shape ``(n, 2)``.

    The point count is Poisson with mean ``intensity * volume`` and the
    locations are i.i.d. uniform; deterministic given the generator state.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    n = rng.poisson(intensity * window.volume())
    return window.sample_uniform(n, rng)


def mam_realize(config: MamConfig) -> MarkedPointPattern:
    """One realization of the moving-average model inside ``config.window``.

    The Poisson pattern is simulated on the window dilated by ``rho``
    (plus-sampling) so that points near the boundary average over their full
    neighborhood and the mark field is stationary inside the window.  Each
    point's mark is the axially folded direction of the sum of the latent
    ``N2(0, kappa)`` vectors of all points within distance ``rho``, its own
    included.

    Returns only the points inside the undilated window.
    """
    rng = np.random.default_rng(config.seed)
    extended = config.window.dilate(config.rho) if config.rho > 0 else config.window
    points = sample_poisson(extended, config.intensity, rng)
    latent = rng.standard_normal((len(points), 2)) @ config.kappa.cholesky().T
    if config.rho > 0 and len(points) > 1:
        sums = latent.copy()
        pairs = cKDTree(points).query_pairs(config.rho, output_type="ndarray")
        if len(pairs):
            np.add.at(sums, pairs[:, 0], latent[pairs[:, 1]])
            np.add.at(sums, pairs[:, 1], latent[pairs[:, 0]])
    else:
        sums = latent
    norms = np.hypot(sums[:, 0], sums[:, 1])
    # ||sum|| below 1e-12 is a probability-zero cancellation; fall back to the
    # point's own latent direction.
    tiny = norms < 1e-12
    if np.any(tiny):
        sums = np.where(tiny[:, None], latent, sums)
        norms = np.where(tiny, np.hypot(latent[:, 0], latent[:, 1]), norms)
    marks = np.atleast_1d(axial_fold(sums / norms[:, None]))
    inside = config.window.contains(points)
    return MarkedPointPattern(points[inside], marks[inside])


@dataclass(frozen=True)
class BoundaryArcs:
    """Exposed boundary pieces of a collection of discs.

    ``disc[k]`` indexes the disc carrying arc ``k``; the arc spans angles
    ``[start[k], end[k]]`` with ``0 <= start < end <= 2 pi``.
    """

    disc: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def lengths(self, radii: np.ndarray) -> np.ndarray:
        return (self.end - self.start) * np.asarray(radii)[self.disc]


def _covered_intervals(i, centers, radii, neighbors):
    """Angular intervals of disc i's boundary lying inside another disc.

    Returns ``None`` if the boundary is completely covered.  Intervals are
    raw ``(a, b)`` pairs with ``b > a`` that may extend beyond ``[0, 2 pi)``.
    """
    ci, ri = centers[i], radii[i]
    covered = []
    for j in neighbors:
        if j == i:
            continue
        dx, dy = centers[j] - ci
        d = math.hypot(dx, dy)
        rj = radii[j]
        if d >= ri + rj:
            continue
        if d + ri <= rj:
            return None
        if d + rj <= ri:
            continue
        cos_half = (d * d + ri * ri - rj * rj) / (2.0 * d * ri)
        half = math.acos(min(1.0, max(-1.0, cos_half)))
        phi = math.atan2(dy, dx)
        covered.append((phi - half, phi + half))
    return covered


def _complement_on_circle(covered):
    """Complement of a union of angular intervals within ``[0, 2 pi]``."""
    pieces = []
    for a, b in covered:
        width = b - a
        if width >= _TWO_PI:
            return []
        a %= _TWO_PI
        b = a + width
        if b <= _TWO_PI:
            pieces.append((a, b))
        else:
            pieces.append((a, _TWO_PI))
            pieces.append((0.0, b - _TWO_PI))
    if not pieces:
        return [(0.0, _TWO_PI)]
    pieces.sort()
    merged = [list(pieces[0])]
    for a, b in pieces[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    exposed = []
    cursor = 0.0
    for a, b in merged:
        if a > cursor:
            exposed.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < _TWO_PI:
        exposed.append((cursor, _TWO_PI))
    return exposed


def boolean_boundary_arcs(centers: np.ndarray, radii: np.ndarray,
                          window: ObservationWindow | None = None) -> BoundaryArcs:
    """Exposed arcs of each disc boundary in a Boolean model of discs.

    For every disc, the parts of its boundary circle not covered by any other
    disc are computed by circle-circle intersection and interval subtraction
    on ``[0, 2 pi)``.  All discs act as potential covers; if ``window`` is
    given, arcs are reported only for discs that can touch it (the others
    cannot contribute boundary inside the window).

    Parameters
    ----------
    centers : ndarray, shape (n, 2)
        Disc centers; the caller is responsible for including every disc that
        can cover boundary near the region of interest (guard zone).
    radii : ndarray, shape (n,)
        Positive disc radii.
    window : ObservationWindow, optional
        Restrict the hosting discs to those within reach of this window.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float).ravel()
    if len(centers) != len(radii):
        raise ValueError("need one radius per center")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    disc_idx, starts, ends = [], [], []
    if len(centers) == 0:
        return BoundaryArcs(np.array([], dtype=np.int64), np.array([]), np.array([]))
    if window is not None:
        hosts = np.flatnonzero(window.distance(centers) <= radii)
    else:
        hosts = np.arange(len(centers))
    tree = cKDTree(centers)
    r_max = float(radii.max())
    for i in hosts:
        # any disc intersecting disc i's boundary circle has center within r_i + r_max
        neighbors = tree.query_ball_point(centers[i], radii[i] + r_max)
        covered = _covered_intervals(i, centers, radii, neighbors)
        if covered is None:
            continue
        for a, b in _complement_on_circle(covered):
            disc_idx.append(i)
            starts.append(a)
            ends.append(b)
    return BoundaryArcs(np.asarray(disc_idx, dtype=np.int64),
                        np.asarray(starts, dtype=float),
                        np.asarray(ends, dtype=float))


def sample_cox_on_boundary(config: BooleanCoxConfig) -> MarkedPointPattern:
    """One realization of the boundary Cox process, marks in ``[0, 2 pi)``.

    Germs are sampled on the window dilated by ``2 * r_max`` so every disc
    that can cover boundary inside the window is present.  Points are placed
    by a Poisson count over the total exposed arc length and inverse-CDF
    positioning along the concatenated arcs; the mark of a point at boundary
    angle ``theta`` of its disc is ``theta`` itself, the outer normal
    direction.  An empty boundary inside the window yields an empty pattern.
    """
    rng = np.random.default_rng(config.seed)
    guard = config.window.dilate(2.0 * config.r_max)
    germs = sample_poisson(guard, config.germ_intensity, rng)
    radii = config.draw_radii(len(germs), rng)
    if len(germs) == 0:
        return MarkedPointPattern(np.empty((0, 2)), np.empty(0))
    arcs = boolean_boundary_arcs(germs, radii, window=config.window)
    lengths = arcs.lengths(radii)
    total = lengths.sum()
    if total <= 0:
        return MarkedPointPattern(np.empty((0, 2)), np.empty(0))
    n = rng.poisson(config.boundary_intensity * total)
    u = rng.uniform(0.0, total, size=n)
    stops = np.cumsum(lengths)
    k = np.minimum(np.searchsorted(stops, u, side="right"), len(lengths) - 1)
    offset = u - (stops[k] - lengths[k])
    disc = arcs.disc[k]
    theta = arcs.start[k] + offset / radii[disc]
    points = germs[disc] + radii[disc, None] * np.column_stack((np.cos(theta),
                                                                np.sin(theta)))
    marks = np.mod(theta, _TWO_PI)
    inside = config.window.contains(points)
    return MarkedPointPattern(points[inside], marks[inside])


def realize(config) -> MarkedPointPattern:
    """Simulate one pattern from either model config."""
    if isinstance(config, MamConfig):
        return mam_realize(config)
    if isinstance(config, BooleanCoxConfig):
        return sample_cox_on_boundary(config)
    raise TypeError(f"unknown model config {type(config).__name__}")
