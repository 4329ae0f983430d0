"""Reading and writing KITTI/WADS-style scans, labels, masks and reports.

Binary layouts (all little-endian, no header):

* scan: float32 x, y, z, intensity per point (16 bytes)
* labels: uint32 per point; low 16 bits are the semantic class, high 16 bits
  the instance id (discarded)
* mask: uint8 0/1 per point, 1 = kept
"""
from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FilterMask, LabelSet, PointCloud
from .errors import AlignmentError, FormatError, ValidationError

SCAN_DTYPE = np.dtype("<f4")
LABEL_DTYPE = np.dtype("<u4")
POINT_BYTES = 4 * SCAN_DTYPE.itemsize
DEFAULT_SNOW_CLASSES = frozenset({110})

FORMATS = ("kitti_bin", "ply_ascii")
REPORT_FIELDS = ("tp", "fp", "tn", "fn", "precision", "recall")


@dataclass(frozen=True)
class ScanFile:
    path: Path
    format: str = "kitti_bin"

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        if self.format not in FORMATS:
            raise FormatError(f"unknown scan format {self.format!r}; expected one of {FORMATS}")

    @classmethod
    def from_path(cls, path) -> "ScanFile":
        """Infer the format from the suffix (``.ply`` is ASCII PLY, anything else KITTI bin)."""
        path = Path(path)
        return cls(path, "ply_ascii" if path.suffix.lower() == ".ply" else "kitti_bin")


def _as_scanfile(file) -> ScanFile:
    return file if isinstance(file, ScanFile) else ScanFile.from_path(file)


@contextlib.contextmanager
def atomic_write(path, mode="wb"):
    """Write to a temporary sibling and rename over ``path`` only on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# scans
# --------------------------------------------------------------------------

def _decode_kitti(raw: bytes) -> np.ndarray:
    if len(raw) % POINT_BYTES:
        raise FormatError(
            f"scan is {len(raw)} bytes, not a multiple of {POINT_BYTES} (x, y, z, intensity as float32)"
        )
    return np.frombuffer(raw, dtype=SCAN_DTYPE).reshape(-1, 4)


def _check_finite(data: np.ndarray) -> None:
    bad = ~np.isfinite(data).all(axis=1)
    if bad.any():
        raise ValidationError(f"non-finite value at point index {int(np.argmax(bad))}")


def _read_ply(path: Path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        if fh.readline().strip() != "ply":
            raise FormatError(f"{path}: missing 'ply' magic line")
        n = None
        props: list[str] = []
        for line in fh:
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "format" and tok[1] != "ascii":
                raise FormatError(f"{path}: only ASCII PLY is supported, got {tok[1]}")
            if tok[0] == "element":
                if tok[1] != "vertex":
                    raise FormatError(f"{path}: unsupported element {tok[1]!r}")
                n = int(tok[2])
            elif tok[0] == "property":
                props.append(tok[-1])
            elif tok[0] == "end_header":
                break
        if n is None:
            raise FormatError(f"{path}: no vertex element in header")
        missing = {"x", "y", "z", "intensity"} - set(props)
        if missing:
            raise FormatError(f"{path}: missing properties {sorted(missing)}")
        body = np.loadtxt(fh, dtype=np.float64, ndmin=2) if n else np.empty((0, len(props)))
    if len(body) != n:
        raise FormatError(f"{path}: header declares {n} vertices, body has {len(body)}")
    cols = [props.index(c) for c in ("x", "y", "z", "intensity")]
    # properties are declared float; decimal text must land on float32 values
    return body[:, cols].reshape(-1, 4).astype(SCAN_DTYPE)


def read_scan(file) -> PointCloud:
    """Load a scan; ``file`` is a :class:`ScanFile` or a path (format from suffix)."""
    file = _as_scanfile(file)
    if file.format == "kitti_bin":
        data = _decode_kitti(file.path.read_bytes())
    else:
        data = _read_ply(file.path)
    _check_finite(data)
    return PointCloud.from_array(data)


def encode_scan(cloud: PointCloud, format: str = "kitti_bin") -> bytes:
    if format == "kitti_bin":
        return np.ascontiguousarray(cloud.as_array(), dtype=SCAN_DTYPE).tobytes()
    if format != "ply_ascii":
        raise FormatError(f"unknown scan format {format!r}; expected one of {FORMATS}")
    buf = io.StringIO()
    buf.write(
        "ply\nformat ascii 1.0\n"
        f"element vertex {len(cloud)}\n"
        "property float x\nproperty float y\nproperty float z\nproperty float intensity\n"
        "end_header\n"
    )
    # 9 significant digits round-trip any float32
    np.savetxt(buf, cloud.as_array().astype(np.float32), fmt="%.9g")
    return buf.getvalue().encode("ascii")


def write_scan(cloud: PointCloud, out) -> None:
    out = _as_scanfile(out)
    data = encode_scan(cloud, out.format)
    with atomic_write(out.path) as fh:
        fh.write(data)


def write_filtered(cloud: PointCloud, mask: FilterMask, out) -> None:
    """Write the kept points of ``cloud`` in their original relative order."""
    mask.check_aligned(len(cloud))
    write_scan(cloud.select(mask.keep), out)


# --------------------------------------------------------------------------
# labels and masks
# --------------------------------------------------------------------------

def read_labels(path, positive_classes=DEFAULT_SNOW_CLASSES, n_points: int | None = None) -> LabelSet:
    """Load a per-point label file, keeping only the semantic (low 16 bit) class.

    ``n_points`` is the size of the companion scan; a mismatch raises
    :class:`AlignmentError` before any filtering happens.
    """
    raw = Path(path).read_bytes()
    if len(raw) % LABEL_DTYPE.itemsize:
        raise FormatError(f"label file is {len(raw)} bytes, not a multiple of 4")
    labels = np.frombuffer(raw, dtype=LABEL_DTYPE) & 0xFFFF
    if n_points is not None and len(labels) != n_points:
        raise AlignmentError(f"label file has {len(labels)} entries but scan has {n_points} points")
    return LabelSet(labels, frozenset(positive_classes))


def encode_labels(labels) -> bytes:
    values = labels.labels if isinstance(labels, LabelSet) else np.asarray(labels)
    return np.ascontiguousarray(values, dtype=LABEL_DTYPE).tobytes()


def write_labels(labels, path) -> None:
    with atomic_write(path) as fh:
        fh.write(encode_labels(labels))


def read_mask(path, n_points: int | None = None) -> FilterMask:
    raw = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    if raw.size and raw.max() > 1:
        raise FormatError(f"mask file {path} contains bytes other than 0 and 1")
    mask = FilterMask(raw.astype(bool))
    if n_points is not None:
        mask.check_aligned(n_points, "scan")
    return mask


def encode_mask(mask: FilterMask) -> bytes:
    return mask.keep.astype(np.uint8).tobytes()


def write_mask(mask: FilterMask, path) -> None:
    with atomic_write(path) as fh:
        fh.write(encode_mask(mask))


def mask_from_filtered(original: PointCloud, filtered: PointCloud) -> FilterMask:
    """Recover the keep-mask that turned ``original`` into ``filtered``.

    ``filtered`` must be an order-preserving subsequence of ``original``
    (as produced by :func:`write_filtered`); points are matched on their
    float32 encoding, earliest match first.
    """
    a = np.ascontiguousarray(original.as_array(), dtype=SCAN_DTYPE).view(np.dtype((np.void, POINT_BYTES))).ravel()
    b = np.ascontiguousarray(filtered.as_array(), dtype=SCAN_DTYPE).view(np.dtype((np.void, POINT_BYTES))).ravel()
    keep = np.zeros(len(a), dtype=bool)
    j = 0
    for i in range(len(a)):
        if j < len(b) and a[i] == b[j]:
            keep[i] = True
            j += 1
    if j != len(b):
        raise AlignmentError(
            f"filtered scan is not a subsequence of the original ({j} of {len(b)} points matched)"
        )
    return FilterMask(keep)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def report_row(report) -> list[str]:
    return [_fmt(getattr(report, f)) for f in REPORT_FIELDS]


def encode_report(report, format: str = "csv") -> bytes:
    """Serialize an :class:`~idsor.evaluation.EvalReport` as CSV or JSON.

    Field order is fixed (tp, fp, tn, fn, precision, recall).  Undefined
    precision/recall becomes ``nan`` in CSV and ``null`` in JSON.
    """
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        w.writerow(report_row(report))
        return buf.getvalue().encode()
    if format == "json":
        obj = {}
        for f in REPORT_FIELDS:
            v = getattr(report, f)
            obj[f] = int(v) if f in ("tp", "fp", "tn", "fn") else (None if v is None else float(v))
        return (json.dumps(obj, indent=2) + "\n").encode()
    raise FormatError(f"unknown report format {format!r}; expected csv or json")


def write_report(report, path, format: str = "csv") -> None:
    data = encode_report(report, format)
    with atomic_write(path) as fh:
        fh.write(data)


def commit_files(files: dict) -> None:
    """Write several ``{path: bytes}`` outputs so that either all appear or none.

    Every payload goes to a temporary sibling first; renames happen only
    after all temporaries are complete.
    """
    staged = []
    try:
        for path, data in files.items():
            path = Path(path)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            staged.append((tmp, path))
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(tmp)
