"""Range distribution of weather-induced returns.

Ranges of rain/snow returns are modelled as Gamma(k, theta).  The density
feeds a logistic-like weight ``alpha = rho*f / (rho*f + 1)`` that tells the
filter how much to trust intensity at a given range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PointCloud
from .errors import ConfigError, FitError

DEFAULT_BIN_WIDTH = 3.0
# field-of-view half angle for synthetic weather directions
ELEVATION_LIMIT = math.radians(30.0)


@dataclass(frozen=True)
class GammaParams:
    """Shape ``k`` (unitless) and scale ``theta`` (meters) of the range PDF."""

    k: float = 2.15
    theta: float = 2.38

    def __post_init__(self):
        for name in ("k", "theta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"Gamma {name} must be finite and > 0, got {v}")

    @property
    def mean(self) -> float:
        return self.k * self.theta

    @property
    def variance(self) -> float:
        return self.k * self.theta**2

    @property
    def mode(self) -> float:
        return max(self.k - 1.0, 0.0) * self.theta


DEFAULT_PARAMS = GammaParams()


def gamma_pdf(params: GammaParams, r):
    """Gamma density at range ``r`` (scalar or array); zero for ``r < 0``.

    Evaluated in log space; the normalising constant uses ``math.lgamma``.
    """
    r_arr = np.asarray(r, dtype=np.float64)
    if not np.isfinite(r_arr).all():
        raise ValueError("range must be finite")
    k, theta = params.k, params.theta
    log_norm = -math.lgamma(k) - k * math.log(theta)
    out = np.zeros_like(r_arr)
    pos = r_arr > 0
    rp = r_arr[pos]
    out[pos] = np.exp(log_norm + (k - 1.0) * np.log(rp) - rp / theta)
    at0 = r_arr == 0
    if at0.any():
        if k == 1.0:
            out[at0] = 1.0 / theta
        elif k < 1.0:
            out[at0] = np.inf
    return out if out.ndim else float(out)


def alpha_weight(params: GammaParams, rho: float, r):
    """Range-dependent intensity weight in ``[0, 1)``."""
    if not (math.isfinite(rho) and rho >= 0):
        raise ConfigError(f"rho must be finite and >= 0, got {rho}")
    x = rho * np.asarray(gamma_pdf(params, r))
    out = x / (x + 1.0)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class RangeHistogram:
    """Half-open bins ``[b*w, (b+1)*w)`` starting at zero range."""

    bin_width: float
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def bin_starts(self) -> np.ndarray:
        return np.arange(len(self.counts)) * self.bin_width

    @property
    def density(self) -> np.ndarray:
        """Counts normalised so the histogram integrates to one."""
        if self.total == 0:
            return np.zeros(len(self.counts))
        return self.counts / (self.total * self.bin_width)


def build_histogram(ranges, bin_width: float = DEFAULT_BIN_WIDTH) -> RangeHistogram:
    if not bin_width > 0:
        raise ConfigError(f"bin_width must be > 0, got {bin_width}")
    r = np.asarray(ranges, dtype=np.float64).reshape(-1)
    if r.size == 0:
        return RangeHistogram(bin_width, np.zeros(0, dtype=np.int64))
    b = np.floor(r / bin_width).astype(np.int64)
    # division rounding can land a value one bin off its true edge
    b[r < b * bin_width] -= 1
    b[r >= (b + 1) * bin_width] += 1
    return RangeHistogram(bin_width, np.bincount(b))


def fit_gamma_mom(ranges) -> GammaParams:
    """Method-of-moments fit with population variance: ``k = m^2/v``, ``theta = v/m``."""
    r = np.asarray(ranges, dtype=np.float64).reshape(-1)
    if r.size < 2:
        raise FitError(f"need at least 2 range samples to fit, got {r.size}")
    m = r.mean()
    v = r.var()
    if not v > 0 or not m > 0:
        raise FitError(f"degenerate range samples (mean={m:g}, variance={v:g})")
    return GammaParams(m * m / v, v / m)


def sample_weather_points(
    params: GammaParams,
    count: int,
    intensity_ceiling: float = 1.0,
    seed=None,
) -> PointCloud:
    """Synthetic weather returns for fixtures.

    Ranges are i.i.d. Gamma(params); directions are area-uniform over the
    band of elevations within +-30 degrees (a spinning LiDAR's vertical
    field of view); raw intensities are uniform on ``[0, intensity_ceiling]``.
    """
    if count < 0 or intensity_ceiling < 0:
        raise ConfigError("count and intensity_ceiling must be >= 0")
    rng = np.random.default_rng(seed)
    r = rng.gamma(params.k, params.theta, size=count)
    az = rng.uniform(0.0, 2.0 * np.pi, size=count)
    sin_el = rng.uniform(-math.sin(ELEVATION_LIMIT), math.sin(ELEVATION_LIMIT), size=count)
    cos_el = np.sqrt(1.0 - sin_el**2)
    xyz = r[:, None] * np.column_stack([cos_el * np.cos(az), cos_el * np.sin(az), sin_el])
    inten = rng.uniform(0.0, intensity_ceiling, size=count)
    return PointCloud(xyz, inten)
