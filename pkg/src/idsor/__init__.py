"""Weather-robust LiDAR outlier removal (SOR, DSOR, DROR, IDSOR and a DROR-prior IDSOR)."""
from .core import FilterMask, LabelSet, PointCloud, compute_ranges, normalize_intensity
from .errors import AlignmentError, ConfigError, FitError, FormatError, IdsorError, ValidationError
from .evaluation import EvalReport, best_entry, evaluate, expand_grid, sweep
from .filters import (
    DdiorConfig,
    DrorConfig,
    DsorConfig,
    IdsorConfig,
    ScanContext,
    SorConfig,
    ddior_filter,
    dror_filter,
    dror_prior_idsor,
    dsor_filter,
    global_threshold,
    idsor_filter,
    idsor_threshold,
    registered,
    run_filter,
    sor_filter,
)
from .kitti import ScanFile, read_labels, read_scan, write_filtered, write_report
from .weather import (
    DEFAULT_PARAMS,
    GammaParams,
    alpha_weight,
    build_histogram,
    fit_gamma_mom,
    gamma_pdf,
    sample_weather_points,
)

__version__ = "0.1.0"
