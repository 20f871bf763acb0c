"""Figures written next to the CSV/JSON outputs (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .imagery import Histogram


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    return path


def histogram_figure(
    hist: Histogram, levels: Sequence[int], path: str | Path, title: str = ""
) -> Path:
    """Histogram over pixel values with a vertical line per threshold.

    ``levels`` are gray levels; lines sit at the matching pixel value
    ``level - 1`` (the first value of the upper class).
    """
    fig = Figure(figsize=(6.4, 3.6))
    ax = fig.add_subplot()
    ax.bar(np.arange(hist.counts.size), hist.counts, width=1.0, color="0.35")
    for lv in levels:
        ax.axvline(lv - 1, color="tab:red", linewidth=1.0)
    ax.set_xlim(-0.5, hist.counts.size - 0.5)
    ax.set_xlabel("pixel value")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def convergence_figure(history: Sequence[float], path: str | Path, title: str = "") -> Path:
    """Best fitness after every generation."""
    fig = Figure(figsize=(6.4, 3.6))
    ax = fig.add_subplot()
    ax.plot(np.arange(1, len(history) + 1), history, color="tab:blue")
    ax.set_xlabel("generation")
    ax.set_ylabel("best fitness")
    ax.ticklabel_format(axis="y", useOffset=False, style="plain")
    if title:
        ax.set_title(title)
    return _save(fig, path)
