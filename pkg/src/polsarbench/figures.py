"""Matplotlib rendering of benchmark results to image files.

Import of matplotlib is deferred into the functions so the library core works
without a plotting stack; the Agg backend is forced for headless use.
"""

from __future__ import annotations

import math
from pathlib import Path

from .assessment import Histogram, SweepPoint


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def histogram_figure(hist: Histogram, out_path: str | Path, *,
                     subtitle: str = "") -> Path:
    """Bar chart of one parameter's estimate histogram with a truth marker."""
    plt = _pyplot()
    out_path = Path(out_path)
    widths = hist.edges[1:] - hist.edges[:-1]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.bar(hist.edges[:-1], hist.counts, width=widths, align="edge",
           color="#4878a8", edgecolor="white", linewidth=0.4)
    if hist.truth is not None and math.isfinite(hist.truth):
        ax.axvline(hist.truth, color="#c23b22", linestyle="--", linewidth=1.4,
                   label=f"truth = {hist.truth:.4g}")
        ax.legend(frameon=False, fontsize=9)
    ax.set_xlabel(hist.name or "value")
    ax.set_ylabel("trials")
    title = hist.name or "histogram"
    if subtitle:
        title = f"{title}  ({subtitle})"
    ax.set_title(title, fontsize=10)
    extra = hist.underflow + hist.overflow
    if extra:
        ax.annotate(f"{extra} out of range", xy=(0.98, 0.95),
                    xycoords="axes fraction", ha="right", fontsize=8,
                    color="#666666")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def sweep_figure(points: list[SweepPoint], out_path: str | Path) -> Path:
    """Two-panel chart: per-mechanism relative error and spread vs entropy."""
    plt = _pyplot()
    out_path = Path(out_path)
    hs = [p.entropy for p in points]
    series = [
        ("volume", [p.p_v_error_pct for p in points], [p.p_v_std_pp for p in points], "#2d6a4f"),
        ("double bounce", [p.p_d_error_pct for p in points], [p.p_d_std_pp for p in points], "#c23b22"),
    ]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.6, 3.4), sharex=True)
    for label, err, _, color in series:
        ax1.plot(hs, err, "o-", color=color, markersize=3.5, label=label)
    ax1.set_xlabel("entropy")
    ax1.set_ylabel("relative power error (%)")
    ax1.legend(frameon=False, fontsize=9)
    for label, _, std, color in series:
        ax2.plot(hs, std, "s-", color=color, markersize=3.5, label=label)
    ax2.set_xlabel("entropy")
    ax2.set_ylabel("std of relative power (pp)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
