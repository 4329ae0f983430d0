"""Point cloud, label and mask containers plus per-point derived quantities."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .errors import AlignmentError, ConfigError, ValidationError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class PointCloud:
    """Ordered set of LiDAR returns.

    Parameters
    ----------
    xyz : array_like, shape (N, 3)
        Sensor-centric Cartesian coordinates in meters.
    intensity : array_like, shape (N,)
        Raw, non-negative reflectance as recorded by the sensor.

    Arrays are stored as read-only float64 copies; index ``i`` in every
    aligned structure (mask, labels, ranges) refers to point ``i`` here.
    """

    __slots__ = ("xyz", "intensity")

    def __init__(self, xyz, intensity):
        xyz = np.array(xyz, dtype=np.float64).reshape(-1, 3)
        intensity = np.array(intensity, dtype=np.float64).reshape(-1)
        if len(xyz) != len(intensity):
            raise AlignmentError(
                f"xyz has {len(xyz)} rows but intensity has {len(intensity)} values"
            )
        bad = ~(np.isfinite(xyz).all(axis=1) & np.isfinite(intensity))
        if bad.any():
            raise ValidationError(f"non-finite value at point index {int(np.argmax(bad))}")
        neg = intensity < 0
        if neg.any():
            raise ValidationError(f"negative intensity at point index {int(np.argmax(neg))}")
        self.xyz = _frozen(xyz)
        self.intensity = _frozen(intensity)

    @classmethod
    def from_array(cls, data) -> "PointCloud":
        """Build from an (N, 4) array of x, y, z, intensity."""
        data = np.asarray(data, dtype=np.float64).reshape(-1, 4)
        return cls(data[:, :3], data[:, 3])

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty((0, 3)), np.empty(0))

    def __len__(self) -> int:
        return len(self.xyz)

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)})"

    def as_array(self) -> np.ndarray:
        """(N, 4) float64 copy with columns x, y, z, intensity."""
        return np.column_stack([self.xyz, self.intensity])

    def select(self, keep) -> "PointCloud":
        keep = np.asarray(keep, dtype=bool)
        return PointCloud(self.xyz[keep], self.intensity[keep])

    @staticmethod
    def concat(clouds: Iterable["PointCloud"]) -> "PointCloud":
        clouds = list(clouds)
        if not clouds:
            return PointCloud.empty()
        return PointCloud(
            np.concatenate([c.xyz for c in clouds]),
            np.concatenate([c.intensity for c in clouds]),
        )


@dataclass(frozen=True)
class FilterMask:
    """Per-point verdict of a filter: ``True`` keeps the point.

    ``info`` carries optional diagnostics (fitted parameters, fallback
    warnings) and never affects the verdicts.
    """

    keep: np.ndarray
    info: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        keep = np.asarray(self.keep)
        if keep.dtype != bool:
            if not np.isin(keep, (0, 1)).all():
                raise ValidationError("mask values must be boolean or 0/1")
            keep = keep.astype(bool)
        object.__setattr__(self, "keep", _frozen(keep.reshape(-1)))

    def __len__(self) -> int:
        return len(self.keep)

    @property
    def n_kept(self) -> int:
        return int(np.count_nonzero(self.keep))

    @property
    def n_removed(self) -> int:
        return len(self) - self.n_kept

    @property
    def removed(self) -> np.ndarray:
        return ~self.keep

    def check_aligned(self, n: int, what: str = "cloud") -> None:
        if len(self) != n:
            raise AlignmentError(f"mask has {len(self)} entries but {what} has {n} points")


@dataclass(frozen=True)
class LabelSet:
    """Semantic class id per point and the ids that count as weather."""

    labels: np.ndarray
    positive_classes: frozenset = frozenset({110})

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.size and (labels.min() < 0):
            raise ValidationError("class ids must be non-negative")
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64).reshape(-1)))
        object.__setattr__(self, "positive_classes", frozenset(int(c) for c in self.positive_classes))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def positive(self) -> np.ndarray:
        """Boolean array, ``True`` where the point is a weather return."""
        if not self.positive_classes:
            raise ConfigError("positive_classes is empty")
        return np.isin(self.labels, sorted(self.positive_classes))

    def with_positive(self, classes) -> "LabelSet":
        return LabelSet(self.labels, frozenset(classes))


def compute_ranges(cloud: PointCloud) -> np.ndarray:
    """Euclidean distance of every point from the sensor origin."""
    return np.sqrt(np.einsum("ij,ij->i", cloud.xyz, cloud.xyz))


def normalize_intensity(cloud: PointCloud) -> np.ndarray:
    """Raw intensities divided by the scan maximum.

    A scan whose maximum intensity is zero maps to all zeros.
    """
    if len(cloud) == 0:
        return np.empty(0)
    peak = cloud.intensity.max()
    if peak <= 0:
        return np.zeros(len(cloud))
    return cloud.intensity / peak
