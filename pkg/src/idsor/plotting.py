"""Diagnostic figures written next to the CSV/JSON reports.

Figures are built with the object-oriented matplotlib API on an Agg canvas,
so nothing here touches pyplot's global state or needs a display.
"""
from __future__ import annotations

import io
from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .weather import GammaParams, RangeHistogram, gamma_pdf

FIG_WIDTH = 6.0
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def new_figure(width: float = FIG_WIDTH, height: float | None = None):
    fig = Figure(figsize=(width, height or width * GOLDEN), dpi=120)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    ax.grid(True, alpha=0.3, linewidth=0.6)
    return fig, ax


def figure_bytes(fig: Figure, format: str = "png") -> bytes:
    buf = io.BytesIO()
    fig.tight_layout()
    fig.savefig(buf, format=format)
    return buf.getvalue()


def figure_path_for(report_path) -> Path:
    """Sibling path for the figure that accompanies ``report_path``."""
    return Path(report_path).with_suffix(".png")


def _legend(ax, **kw) -> None:
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False, **kw)


def range_histogram_figure(hist: RangeHistogram, params: GammaParams | None = None) -> Figure:
    """Normalised range histogram with the Gamma density overlaid."""
    fig, ax = new_figure()
    if len(hist.counts):
        ax.bar(hist.bin_starts, hist.density, width=hist.bin_width, align="edge",
               color="#9ecae1", edgecolor="#3182bd", linewidth=0.6, label="weather returns")
    if params is not None:
        top = max(hist.bin_width * max(len(hist.counts), 1), params.mean + 6 * np.sqrt(params.variance))
        r = np.linspace(0.0, top, 400)
        ax.plot(r, gamma_pdf(params, r), color="#d62728", linewidth=1.5,
                label=f"Gamma k={params.k:.3g}, θ={params.theta:.3g} m")
    ax.set_xlabel("range [m]")
    ax.set_ylabel("density [1/m]")
    ax.set_xlim(left=0)
    _legend(ax)
    return fig


def sweep_figure(entries: Sequence, title: str = "", highlight=None) -> Figure:
    """Precision against recall for every sweep entry."""
    fig, ax = new_figure()
    pts = [(e.report.recall, e.report.precision) for e in entries
           if e.report.recall is not None and e.report.precision is not None]
    if pts:
        rec, prec = np.array(pts).T
        ax.scatter(rec, prec, s=14, color="#636363", alpha=0.7, label="configurations")
    if highlight is not None and highlight.report.precision is not None:
        ax.scatter([highlight.report.recall], [highlight.report.precision], s=60,
                   facecolor="none", edgecolor="#d62728", linewidth=1.5, label="selected")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    _legend(ax, loc="lower left")
    return fig


def report_figure(report, title: str = "") -> Figure:
    fig, ax = new_figure(width=3.5, height=3.0)
    vals = [report.precision, report.recall]
    heights = [np.nan if v is None else v for v in vals]
    bars = ax.bar(["precision", "recall"], heights, color=["#3182bd", "#e6550d"], width=0.6)
    for b, v in zip(bars, vals):
        ax.annotate("n/a" if v is None else f"{v:.3f}", (b.get_x() + b.get_width() / 2, (v or 0) + 0.02),
                    ha="center", fontsize=9)
    ax.set_ylim(0, 1.1)
    if title:
        ax.set_title(title)
    return fig
