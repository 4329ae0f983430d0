"""Precision/recall of filter masks against point labels.

Weather returns are the positive class: a removed weather point is a true
positive, a removed scene point a false positive.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FilterMask, LabelSet
from .errors import AlignmentError, ConfigError
from .filters import ScanContext, get_filter, resolve_params, run_filter
from .kitti import REPORT_FIELDS, atomic_write, report_row


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float | None:
        """Fraction of removed points that are weather; ``None`` if nothing was removed."""
        removed = self.tp + self.fp
        return self.tp / removed if removed else None

    @property
    def recall(self) -> float | None:
        """Fraction of weather points removed; ``None`` if the scan has no weather."""
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in REPORT_FIELDS}


def evaluate(mask: FilterMask, labels: LabelSet) -> EvalReport:
    if len(mask) != len(labels):
        raise AlignmentError(f"mask has {len(mask)} entries but labels have {len(labels)}")
    removed = mask.removed
    pos = labels.positive
    tp = int(np.count_nonzero(removed & pos))
    fp = int(np.count_nonzero(removed & ~pos))
    fn = int(np.count_nonzero(~removed & pos))
    return EvalReport(tp, fp, len(mask) - tp - fp - fn, fn)


@dataclass(frozen=True)
class SweepEntry:
    order: int
    config: dict
    report: EvalReport


def expand_grid(grid: dict[str, Sequence]) -> list[dict]:
    """Cartesian product of ``grid`` in declared key order, last key varying fastest."""
    if not grid:
        raise ConfigError("parameter grid is empty")
    keys = list(grid)
    for k in keys:
        if len(grid[k]) == 0:
            raise ConfigError(f"grid axis {k!r} has no values")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _rank_key(e: SweepEntry):
    r, p = e.report.recall, e.report.precision
    return (-(r if r is not None else -1.0), -(p if p is not None else -1.0), e.order)


def sweep(
    cloud,
    labels: LabelSet,
    filter_name: str,
    grid: dict[str, Sequence],
    base: dict | None = None,
    experimental: bool = False,
) -> list[SweepEntry]:
    """Evaluate every grid point and rank by recall, then precision (both descending).

    ``base`` holds fixed parameters; grid values override them.  A shared
    :class:`ScanContext` keeps the KD-tree and kNN statistics across entries.
    """
    get_filter(filter_name, experimental)
    configs = expand_grid(grid)
    ctx = ScanContext.of(cloud)
    if len(labels) != len(ctx):
        raise AlignmentError(f"labels have {len(labels)} entries but scan has {len(ctx)} points")
    entries = []
    for i, cfg in enumerate(configs):
        params = {**(base or {}), **cfg}
        resolve_params(filter_name, params, experimental)
        mask = run_filter(filter_name, ctx, params, experimental)
        entries.append(SweepEntry(i, params, evaluate(mask, labels)))
    return sorted(entries, key=_rank_key)


def best_entry(entries: Sequence[SweepEntry], min_recall: float = 0.9) -> SweepEntry | None:
    """Highest-precision entry whose recall reaches ``min_recall`` (ties: higher recall, then order)."""
    ok = [e for e in entries if e.report.recall is not None and e.report.recall >= min_recall]
    if not ok:
        return None
    return min(ok, key=lambda e: (-(e.report.precision or 0.0), -e.report.recall, e.order))


def encode_sweep_csv(entries: Sequence[SweepEntry]) -> bytes:
    """One row per entry: parameter columns (first-seen order), then the report fields."""
    keys: list[str] = []
    for e in entries:
        keys.extend(k for k in e.config if k not in keys)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*keys, *REPORT_FIELDS])
    for e in entries:
        w.writerow([*(_param(e.config.get(k, "")) for k in keys), *report_row(e.report)])
    return buf.getvalue().encode()


def write_sweep_csv(entries: Sequence[SweepEntry], path) -> None:
    data = encode_sweep_csv(entries)
    with atomic_write(path) as fh:
        fh.write(data)


def _param(v) -> str:
    if isinstance(v, (tuple, list)):
        return ":".join(f"{x:g}" for x in v)
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)
