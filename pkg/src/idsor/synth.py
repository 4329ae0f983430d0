"""Labeled synthetic scenes: a ray-cast street plus Gamma-sampled weather.

The structured part is produced by casting the beams of a 16-channel
spinning LiDAR (elevations -15..15 degrees, 0.1 degree azimuth step by default) against
a ground plane and a handful of axis-aligned boxes (facades, cars).  Sparse
foliage is scattered uniformly inside hedge volumes.  Weather returns are
drawn with :func:`idsor.weather.sample_weather_points` at low intensity and
make up ``weather_fraction`` of the final cloud.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LabelSet, PointCloud
from .errors import ConfigError
from .weather import DEFAULT_PARAMS, GammaParams, sample_weather_points

# SemanticKITTI-style class ids
ROAD, BUILDING, CAR, VEGETATION, SNOW = 40, 50, 10, 70, 110

SENSOR_HEIGHT = 1.8
MAX_RANGE = 60.0
GROUND_EXTENT = 40.0
INTENSITY_SCALE = 255.0

# (xmin, xmax, ymin, ymax, zmin, zmax), class, intensity range as fraction of scale
_BOXES = [
    ((18.0, 20.0, -12.0, 12.0, -1.8, 6.0), BUILDING, (0.35, 0.9)),
    ((-22.0, -20.0, -10.0, 10.0, -1.8, 7.0), BUILDING, (0.35, 0.9)),
    ((-7.0, 7.0, 11.0, 13.0, -1.8, 5.0), BUILDING, (0.35, 0.9)),
    ((-5.0, 5.0, -14.0, -12.0, -1.8, 4.0), BUILDING, (0.35, 0.9)),
    ((-2.25, 2.25, -6.9, -5.1, -1.8, -0.3), CAR, (0.4, 1.0)),
    ((-8.9, -7.1, -2.25, 2.25, -1.8, -0.3), CAR, (0.4, 1.0)),
    ((7.1, 8.9, 1.0, 5.5, -1.8, -0.3), CAR, (0.4, 1.0)),
]
_GROUND_INTENSITY = (0.15, 0.35)
_HEDGES = [
    (3.0, 5.0, -8.0, -5.0, -1.8, 0.2),
    (-5.0, -3.0, -6.0, -2.0, -1.8, 0.2),
]
_FOLIAGE_INTENSITY = (0.3, 0.8)


@dataclass(frozen=True)
class SceneSpec:
    weather_fraction: float = 0.2
    weather_params: GammaParams = DEFAULT_PARAMS
    weather_intensity: float = 0.25
    foliage_points: int = 250
    range_noise: float = 0.005
    azimuth_step_deg: float = 0.1
    channels: int = 16

    def __post_init__(self):
        if not 0 <= self.weather_fraction < 1:
            raise ConfigError(f"weather_fraction must be in [0, 1), got {self.weather_fraction}")


def _beam_directions(spec: SceneSpec) -> np.ndarray:
    el = np.radians(np.linspace(-15.0, 15.0, spec.channels))
    az = np.radians(np.arange(0.0, 360.0, spec.azimuth_step_deg))
    el, az = np.meshgrid(el, az, indexing="ij")
    ce = np.cos(el)
    return np.column_stack([(ce * np.cos(az)).ravel(), (ce * np.sin(az)).ravel(), np.sin(el).ravel()])


def _ray_box(d: np.ndarray, box) -> np.ndarray:
    lo = np.array(box[0::2])
    hi = np.array(box[1::2])
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = lo / d
        t2 = hi / d
    t_near = np.nanmax(np.minimum(t1, t2), axis=1)
    t_far = np.nanmin(np.maximum(t1, t2), axis=1)
    return np.where((t_near <= t_far) & (t_near > 0), t_near, np.inf)


def _cast(d: np.ndarray):
    t = np.full(len(d), np.inf)
    cls = np.zeros(len(d), dtype=np.int64)
    lo_hi = np.zeros((len(d), 2))
    with np.errstate(divide="ignore"):
        tg = np.where(d[:, 2] < 0, -SENSOR_HEIGHT / d[:, 2], np.inf)
    tg[tg * np.hypot(d[:, 0], d[:, 1]) > GROUND_EXTENT] = np.inf
    t, cls[:] = tg, ROAD
    lo_hi[:] = _GROUND_INTENSITY
    for box, c, inten in _BOXES:
        tb = _ray_box(d, box)
        closer = tb < t
        t = np.where(closer, tb, t)
        cls[closer] = c
        lo_hi[closer] = inten
    hit = t <= MAX_RANGE
    return t[hit], d[hit], cls[hit], lo_hi[hit]


def make_scene(seed=0, spec: SceneSpec = SceneSpec()) -> tuple[PointCloud, LabelSet]:
    """Return a labeled cloud; weather points carry class :data:`SNOW`."""
    rng = np.random.default_rng(seed)
    t, d, cls, lo_hi = _cast(_beam_directions(spec))
    t = t + rng.normal(0.0, spec.range_noise, size=len(t))
    xyz = t[:, None] * d
    inten = rng.uniform(lo_hi[:, 0], lo_hi[:, 1])

    per_hedge = np.diff(np.linspace(0, spec.foliage_points, len(_HEDGES) + 1).astype(int))
    for box, m in zip(_HEDGES, per_hedge):
        lo, hi = np.array(box[0::2]), np.array(box[1::2])
        xyz = np.vstack([xyz, rng.uniform(lo, hi, size=(m, 3))])
        inten = np.concatenate([inten, rng.uniform(*_FOLIAGE_INTENSITY, size=m)])
        cls = np.concatenate([cls, np.full(m, VEGETATION)])

    n_scene = len(xyz)
    n_weather = int(round(spec.weather_fraction / (1.0 - spec.weather_fraction) * n_scene))
    weather = sample_weather_points(
        spec.weather_params, n_weather, spec.weather_intensity, seed=rng.integers(2**63)
    )
    xyz = np.vstack([xyz, weather.xyz])
    inten = np.concatenate([inten, weather.intensity]) * INTENSITY_SCALE
    cls = np.concatenate([cls, np.full(n_weather, SNOW)])

    order = rng.permutation(len(xyz))
    # round through float32 so the cloud survives a KITTI write/read unchanged
    cloud = PointCloud(xyz[order].astype(np.float32), inten[order].astype(np.float32))
    return cloud, LabelSet(cls[order], frozenset({SNOW}))


def weather_fraction_of(labels: LabelSet) -> float:
    return float(labels.positive.mean()) if len(labels) else math.nan
