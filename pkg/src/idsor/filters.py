"""Outlier filters for weather-corrupted LiDAR scans.

Every filter maps a cloud and a config to a :class:`FilterMask`.  Statistics
that several filters share (KD-tree, mean kNN distances, ranges, normalised
intensities) live in a :class:`ScanContext` so comparative runs and sweeps on
one scan build the tree once.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable

import numpy as np

from . import spatial
from .core import FilterMask, PointCloud, compute_ranges, normalize_intensity
from .errors import ConfigError, FitError
from .weather import DEFAULT_PARAMS, GammaParams, alpha_weight, fit_gamma_mom


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class ScanContext:
    """Lazily computed per-scan quantities, cached for reuse across filters."""

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self._index = None
        self._ranges = None
        self._inorm = None
        self._mean_dists: dict[int, np.ndarray] = {}

    @classmethod
    def of(cls, cloud_or_ctx) -> "ScanContext":
        return cloud_or_ctx if isinstance(cloud_or_ctx, cls) else cls(cloud_or_ctx)

    def __len__(self) -> int:
        return len(self.cloud)

    @property
    def index(self) -> spatial.SpatialIndex:
        if self._index is None:
            self._index = spatial.build(self.cloud)
        return self._index

    @property
    def ranges(self) -> np.ndarray:
        if self._ranges is None:
            self._ranges = _readonly(compute_ranges(self.cloud))
        return self._ranges

    @property
    def intensity_norm(self) -> np.ndarray:
        if self._inorm is None:
            self._inorm = _readonly(normalize_intensity(self.cloud))
        return self._inorm

    def mean_dists(self, k_min: int) -> np.ndarray:
        if k_min not in self._mean_dists:
            self._mean_dists[k_min] = _readonly(spatial.mean_knn_distance(self.index, k_min))
        return self._mean_dists[k_min]


def _ctx(cloud, ctx) -> ScanContext:
    if ctx is not None:
        return ctx
    if cloud is None:
        raise ConfigError("either a cloud or a ScanContext is required")
    return ScanContext.of(cloud)


def _require_points(n: int, k_min: int) -> None:
    if n <= k_min:
        raise ConfigError(f"filter needs N > k_min, got N={n}, k_min={k_min}")


# --------------------------------------------------------------------------
# configs
# --------------------------------------------------------------------------

def _check_finite(obj) -> None:
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"{type(obj).__name__}.{f.name} must be finite, got {v}")


@dataclass(frozen=True)
class SorConfig:
    k_min: int = spatial.DEFAULT_K_MIN
    s_g: float = 1.0

    def __post_init__(self):
        _check_finite(self)
        if self.k_min < 1:
            raise ConfigError(f"k_min must be >= 1, got {self.k_min}")


@dataclass(frozen=True)
class DsorConfig:
    k_min: int = spatial.DEFAULT_K_MIN
    s_g: float = 1.0
    s_d: float = 0.05

    def __post_init__(self):
        _check_finite(self)
        if self.k_min < 1:
            raise ConfigError(f"k_min must be >= 1, got {self.k_min}")
        if not self.s_d > 0:
            raise ConfigError(f"s_d must be > 0, got {self.s_d}")

    @property
    def base(self) -> SorConfig:
        return SorConfig(self.k_min, self.s_g)


@dataclass(frozen=True)
class DrorConfig:
    beta: float = 3.0
    azimuth_res: float = math.radians(0.2)
    min_radius: float = 0.04
    min_neighbors: int = 3

    def __post_init__(self):
        _check_finite(self)
        for name in ("beta", "azimuth_res", "min_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.min_neighbors < 1:
            raise ConfigError(f"min_neighbors must be >= 1, got {self.min_neighbors}")


@dataclass(frozen=True)
class IdsorConfig:
    k_min: int = spatial.DEFAULT_K_MIN
    s_g: float = 1.0
    rho: float = 10.0
    s: float = 1.0
    params: GammaParams = field(default_factory=lambda: DEFAULT_PARAMS)

    def __post_init__(self):
        _check_finite(self)
        if self.k_min < 1:
            raise ConfigError(f"k_min must be >= 1, got {self.k_min}")
        if not self.s > 0:
            raise ConfigError(f"s must be > 0, got {self.s}")
        if not self.rho >= 0:
            raise ConfigError(f"rho must be >= 0, got {self.rho}")


@dataclass(frozen=True)
class DdiorConfig:
    """Experimental distance/intensity baseline.

    Per distance interval ``b`` (width ``interval`` meters, the last interval
    open-ended) the threshold is ``T_g * r * (distance_weights[b] +
    intensity_weights[b] * i_norm)``.  Both weight vectors must be supplied.
    """

    k_min: int = spatial.DEFAULT_K_MIN
    s_g: float = 1.0
    interval: float = 10.0
    distance_weights: tuple | None = None
    intensity_weights: tuple | None = None

    def __post_init__(self):
        if self.distance_weights is None or self.intensity_weights is None:
            raise ConfigError(
                "ddior needs distance_weights and intensity_weights for every distance interval"
            )
        if len(self.distance_weights) != len(self.intensity_weights) or not self.distance_weights:
            raise ConfigError("distance_weights and intensity_weights must be non-empty and equally long")
        if not self.interval > 0:
            raise ConfigError(f"interval must be > 0, got {self.interval}")


# --------------------------------------------------------------------------
# filters
# --------------------------------------------------------------------------

def global_threshold(mean_dists, s_g: float) -> float:
    """``mean + s_g * std`` of the mean kNN distances (population std)."""
    d = np.asarray(mean_dists, dtype=np.float64)
    if d.size == 0:
        raise ConfigError("global threshold of an empty cloud is undefined")
    return float(d.mean() + s_g * d.std())


def sor_filter(cloud, cfg: SorConfig = SorConfig(), ctx: ScanContext | None = None) -> FilterMask:
    ctx = _ctx(cloud, ctx)
    _require_points(len(ctx), cfg.k_min)
    d = ctx.mean_dists(cfg.k_min)
    t_g = global_threshold(d, cfg.s_g)
    return FilterMask(d < t_g, {"T_g": t_g})


def dsor_filter(cloud, cfg: DsorConfig = DsorConfig(), ctx: ScanContext | None = None) -> FilterMask:
    """SOR with the threshold scaled linearly by range: keep iff ``d < T_g * s_d * r``.

    A point at the sensor origin gets threshold 0 and is always removed.
    """
    ctx = _ctx(cloud, ctx)
    _require_points(len(ctx), cfg.k_min)
    d = ctx.mean_dists(cfg.k_min)
    t_g = global_threshold(d, cfg.s_g)
    return FilterMask(d < t_g * cfg.s_d * ctx.ranges, {"T_g": t_g})


def dror_search_radius(ranges, cfg: DrorConfig) -> np.ndarray:
    return np.maximum(cfg.min_radius, cfg.beta * np.asarray(ranges) * cfg.azimuth_res)


def dror_filter(cloud, cfg: DrorConfig = DrorConfig(), ctx: ScanContext | None = None) -> FilterMask:
    ctx = _ctx(cloud, ctx)
    if len(ctx) == 0:
        raise ConfigError("dror needs at least one point")
    counts = spatial.radius_counts(ctx.index, dror_search_radius(ctx.ranges, cfg))
    return FilterMask(counts >= cfg.min_neighbors)


def idsor_threshold(t_g, s, alpha, i_norm):
    """Per-point threshold ``s * T_g * (1 - alpha * (1 - i_norm))``."""
    h = 1.0 - np.asarray(i_norm)
    return s * t_g * (1.0 - np.asarray(alpha) * h)


def idsor_filter(cloud, cfg: IdsorConfig = IdsorConfig(), ctx: ScanContext | None = None) -> FilterMask:
    """Intensity- and distance-aware SOR.

    Low-intensity points at ranges where weather returns are likely get a
    tighter threshold; with ``rho = 0`` this reduces to SOR at ``s * T_g``.
    """
    ctx = _ctx(cloud, ctx)
    _require_points(len(ctx), cfg.k_min)
    d = ctx.mean_dists(cfg.k_min)
    t_g = global_threshold(d, cfg.s_g)
    alpha = alpha_weight(cfg.params, cfg.rho, ctx.ranges)
    thresh = idsor_threshold(t_g, cfg.s, alpha, ctx.intensity_norm)
    return FilterMask(d < thresh, {"T_g": t_g, "gamma_params": cfg.params})


def dror_prior_idsor(
    cloud,
    dror_cfg: DrorConfig = DrorConfig(),
    idsor_cfg: IdsorConfig = IdsorConfig(),
    ctx: ScanContext | None = None,
) -> FilterMask:
    """IDSOR whose range PDF is fitted to the points DROR removes.

    ``idsor_cfg.params`` is ignored.  If the DROR-removed set cannot support
    a fit, the default parameters are used and the mask's ``info`` carries
    a ``warning`` entry.
    """
    ctx = _ctx(cloud, ctx)
    coarse = dror_filter(None, dror_cfg, ctx)
    info: dict[str, Any] = {"dror_removed": coarse.n_removed}
    try:
        params = fit_gamma_mom(ctx.ranges[coarse.removed])
        info["fallback"] = False
    except FitError as exc:
        params = DEFAULT_PARAMS
        info["fallback"] = True
        info["warning"] = f"range PDF fit failed ({exc}); using default k={params.k}, theta={params.theta}"
        warnings.warn(info["warning"], RuntimeWarning, stacklevel=2)
    fine = idsor_filter(None, replace(idsor_cfg, params=params), ctx)
    info.update(fine.info)
    return FilterMask(fine.keep, info)


def ddior_filter(cloud, cfg: DdiorConfig, ctx: ScanContext | None = None) -> FilterMask:
    """Experimental distance/intensity threshold baseline; see :class:`DdiorConfig`."""
    ctx = _ctx(cloud, ctx)
    _require_points(len(ctx), cfg.k_min)
    d = ctx.mean_dists(cfg.k_min)
    t_g = global_threshold(d, cfg.s_g)
    r = ctx.ranges
    b = np.minimum((r // cfg.interval).astype(np.int64), len(cfg.distance_weights) - 1)
    wd = np.asarray(cfg.distance_weights, dtype=np.float64)[b]
    wi = np.asarray(cfg.intensity_weights, dtype=np.float64)[b]
    return FilterMask(d < t_g * r * (wd + wi * ctx.intensity_norm), {"T_g": t_g})


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterSpec:
    name: str
    defaults: dict
    run: Callable[[ScanContext, dict], FilterMask]
    experimental: bool = False


def _gamma(p) -> GammaParams:
    return GammaParams(p["k"], p["theta"])


def _idsor_cfg(p, params=DEFAULT_PARAMS) -> IdsorConfig:
    return IdsorConfig(p["k_min"], p["s_g"], p["rho"], p["s"], params)


def _dror_cfg(p) -> DrorConfig:
    return DrorConfig(p["beta"], p["azimuth_res"], p["min_radius"], p["min_neighbors"])


_SOR = {"k_min": 5, "s_g": 1.0}
_DROR = {"beta": 3.0, "azimuth_res": math.radians(0.2), "min_radius": 0.04, "min_neighbors": 3}
_IDSOR = {**_SOR, "rho": 10.0, "s": 1.0}

_REGISTRY = {
    spec.name: spec
    for spec in (
        FilterSpec("sor", dict(_SOR), lambda c, p: sor_filter(None, SorConfig(p["k_min"], p["s_g"]), c)),
        FilterSpec(
            "dsor",
            {**_SOR, "s_d": 0.05},
            lambda c, p: dsor_filter(None, DsorConfig(p["k_min"], p["s_g"], p["s_d"]), c),
        ),
        FilterSpec("dror", dict(_DROR), lambda c, p: dror_filter(None, _dror_cfg(p), c)),
        FilterSpec(
            "idsor",
            {**_IDSOR, "k": DEFAULT_PARAMS.k, "theta": DEFAULT_PARAMS.theta},
            lambda c, p: idsor_filter(None, _idsor_cfg(p, _gamma(p)), c),
        ),
        FilterSpec(
            "idsor-dror-prior",
            {**_IDSOR, **_DROR},
            lambda c, p: dror_prior_idsor(None, _dror_cfg(p), _idsor_cfg(p), c),
        ),
        FilterSpec(
            "ddior",
            {**_SOR, "interval": 10.0, "distance_weights": None, "intensity_weights": None},
            lambda c, p: ddior_filter(
                None,
                DdiorConfig(p["k_min"], p["s_g"], p["interval"], p["distance_weights"], p["intensity_weights"]),
                c,
            ),
            experimental=True,
        ),
    )
}

_INT_KEYS = {"k_min", "min_neighbors"}
_VECTOR_KEYS = {"distance_weights", "intensity_weights"}


def registered(experimental: bool = False) -> dict[str, FilterSpec]:
    """Filters addressable by name; experimental baselines only on request."""
    return {n: s for n, s in _REGISTRY.items() if experimental or not s.experimental}


def get_filter(name: str, experimental: bool = False) -> FilterSpec:
    reg = registered(experimental)
    if name not in reg:
        raise ConfigError(f"unknown filter {name!r}; registered filters: {', '.join(reg)}")
    return reg[name]


def _coerce(key: str, value):
    if key in _VECTOR_KEYS:
        if value is None:
            return None
        if isinstance(value, str):
            value = value.split(":")
        return tuple(float(v) for v in np.atleast_1d(value))
    if key in _INT_KEYS:
        f = float(value)
        if not f.is_integer():
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(f)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be numeric, got {value!r}") from None


def resolve_params(name: str, params: dict | None = None, experimental: bool = False) -> dict:
    """Defaults of filter ``name`` overlaid with ``params``; unknown keys are rejected."""
    spec = get_filter(name, experimental)
    params = dict(params or {})
    unknown = sorted(set(params) - set(spec.defaults))
    if unknown:
        raise ConfigError(
            f"unknown parameter(s) {', '.join(unknown)} for filter {name!r}; "
            f"accepted: {', '.join(spec.defaults)}"
        )
    merged = {**spec.defaults, **params}
    return {k: _coerce(k, v) for k, v in merged.items()}


def run_filter(name: str, cloud, params: dict | None = None, experimental: bool = False) -> FilterMask:
    """Run a registered filter; ``cloud`` may be a :class:`ScanContext` to reuse its caches."""
    spec = get_filter(name, experimental)
    return spec.run(ScanContext.of(cloud), resolve_params(name, params, experimental))
