"""KD-tree neighborhood queries used by the filters.

Two statistics are needed: the mean distance from each point to its
``k_min`` nearest neighbours (the point itself excluded) and the number of
other points inside a closed ball around a point.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud
from .errors import ConfigError

DEFAULT_K_MIN = 5

# candidate radius inflation before the exact ``<=`` recheck
_RADIUS_SLACK = 1e-9


class SpatialIndex:
    """Immutable 3-D KD-tree over the coordinates of a :class:`PointCloud`."""

    __slots__ = ("points", "_tree")

    def __init__(self, points):
        pts = np.array(points, dtype=np.float64).reshape(-1, 3)
        pts.flags.writeable = False
        self.points = pts
        self._tree = cKDTree(pts) if len(pts) else None

    def __len__(self) -> int:
        return len(self.points)


def build(cloud: PointCloud) -> SpatialIndex:
    return SpatialIndex(cloud.xyz)


def mean_knn_distance(index: SpatialIndex, k_min: int = DEFAULT_K_MIN) -> np.ndarray:
    """Mean distance from every point to its ``k_min`` nearest other points.

    Duplicated coordinates count as distinct neighbours at distance 0.
    """
    n = len(index)
    if k_min < 1:
        raise ConfigError(f"k_min must be >= 1, got {k_min}")
    if k_min >= n:
        raise ConfigError(f"k_min={k_min} needs at least {k_min + 1} points, cloud has N={n}")
    dist, idx = index._tree.query(index.points, k=k_min + 1, workers=-1)
    dist = np.array(dist, dtype=np.float64)
    # The query point is normally among its own k_min+1 results at distance 0;
    # with many duplicates it can be crowded out, in which case the extra
    # column is simply the farthest of k_min+1 genuine neighbours.
    dist[idx == np.arange(n)[:, None]] = np.inf
    dist.sort(axis=1)
    return dist[:, :k_min].mean(axis=1)


def radius_counts(index: SpatialIndex, radii) -> np.ndarray:
    """Neighbour count within a closed ball of per-point radius, self excluded."""
    n = len(index)
    radii = np.broadcast_to(np.asarray(radii, dtype=np.float64), (n,))
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if (radii <= 0).any():
        raise ConfigError("search radius must be > 0")
    cand = index._tree.query_ball_point(index.points, radii * (1 + _RADIUS_SLACK), workers=-1)
    lens = np.fromiter((len(c) for c in cand), dtype=np.int64, count=n)
    owner = np.repeat(np.arange(n), lens)
    other = np.fromiter((j for c in cand for j in c), dtype=np.int64, count=int(lens.sum()))
    d = np.sqrt(((index.points[other] - index.points[owner]) ** 2).sum(axis=1))
    hit = (d <= radii[owner]) & (other != owner)
    return np.bincount(owner[hit], minlength=n)


def radius_count(index: SpatialIndex, i: int, radius: float) -> int:
    """Number of points ``j != i`` with ``|p_j - p_i| <= radius``."""
    if radius <= 0:
        raise ConfigError(f"search radius must be > 0, got {radius}")
    p = index.points[i]
    cand = np.asarray(index._tree.query_ball_point(p, radius * (1 + _RADIUS_SLACK)), dtype=np.int64)
    d = np.sqrt(((index.points[cand] - p) ** 2).sum(axis=1))
    return int(np.count_nonzero((d <= radius) & (cand != i)))
