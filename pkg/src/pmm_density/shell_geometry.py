"""kNN radii and shell-volume spacings of particle clouds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientDataError

# rows per block in the pairwise scan; bounds memory at ~block*N*d floats
_BLOCK = 256


@dataclass(frozen=True)
class ParticleCloud:
    """N points in R^d living on a p-dimensional manifold."""

    points: np.ndarray
    p: int
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be an N x d matrix")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.p < 1 or self.p > pts.shape[1]:
            raise ValueError(f"intrinsic dimension p={self.p} must satisfy 1 <= p <= d={pts.shape[1]}")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (pts.shape[0],):
                raise ValueError("labels must have one entry per point")
            object.__setattr__(self, "labels", labels)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def take(self, idx) -> "ParticleCloud":
        labels = None if self.labels is None else self.labels[idx]
        return ParticleCloud(self.points[idx], self.p, labels)


@dataclass(frozen=True)
class SpacingPanel:
    """Sorted kNN radii ``radii[i, j]`` and shell volumes ``spacings[i, j]``."""

    radii: np.ndarray
    spacings: np.ndarray
    p: int

    @property
    def N(self) -> int:
        return self.spacings.shape[0]

    @property
    def k(self) -> int:
        return self.spacings.shape[1]

    def prefix(self, k: int) -> "SpacingPanel":
        """Panel restricted to the first ``k`` neighbours."""
        if not 1 <= k <= self.k:
            raise ValueError(f"prefix k={k} outside [1, {self.k}]")
        return SpacingPanel(self.radii[:, :k], self.spacings[:, :k], self.p)


def unit_ball_volume(p: int) -> float:
    """Volume of the Euclidean unit ball in p dimensions, pi^(p/2) / Gamma(p/2 + 1)."""
    if int(p) != p or p < 1:
        raise ValueError(f"invalid dimension p={p}")
    return math.pi ** (p / 2) / math.gamma(p / 2 + 1)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(-1))


def knn_radii(cloud: ParticleCloud, k: int) -> np.ndarray:
    """Distances from each point to its k nearest other points, ascending.

    Full O(N^2) scan. Ties are broken by point index (stable sort), and the
    point itself is excluded by index, so duplicated points yield zero radii.
    """
    N = cloud.N
    if k < 1:
        raise ValueError("k must be positive")
    if k >= N:
        raise InsufficientDataError(f"need N >= k+1 particles, got N={N}, k={k}")
    pts = cloud.points
    out = np.empty((N, k))
    for start in range(0, N, _BLOCK):
        stop = min(start + _BLOCK, N)
        dist = pairwise_distances(pts[start:stop], pts)
        rows = np.arange(stop - start)
        dist[rows, rows + start] = np.inf
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        out[start:stop] = np.take_along_axis(dist, order, axis=1)
    return out


def shell_spacings(radii: np.ndarray, p: int) -> SpacingPanel:
    """Shell volumes V_p (r_j^p - r_{j-1}^p) with r_0 = 0."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 2:
        raise ValueError("radii must be an N x k matrix")
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    if np.any(np.diff(radii, axis=1) < 0):
        raise ValueError("radii rows must be sorted ascending")
    vol = unit_ball_volume(p) * radii**p
    spacings = np.diff(vol, axis=1, prepend=0.0)
    # rounding in the difference can leave -0.0 or tiny negatives for tied radii
    np.maximum(spacings, 0.0, out=spacings)
    return SpacingPanel(radii, spacings, p)


def spacing_panel(cloud: ParticleCloud, k: int) -> SpacingPanel:
    return shell_spacings(knn_radii(cloud, k), cloud.p)


def normalize_spacings(panel: SpacingPanel) -> np.ndarray:
    """Normalized spacings s = N * Delta (no per-particle rescaling)."""
    return panel.N * panel.spacings
