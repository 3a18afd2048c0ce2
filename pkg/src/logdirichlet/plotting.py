"""Optional SVG line plots of report series.

matplotlib is imported lazily so that the numerical package works without it.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def emit_plot(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    logy: bool = False,
    step: bool = False,
) -> Path:
    """Write a line plot with one line per ``label -> (x, y)`` entry as SVG."""
    if not series:
        raise ValueError("emit_plot needs at least one series")
    for label, (x, y) in series.items():
        if len(x) == 0 or len(x) != len(y):
            raise ValueError(f"series {label!r} is empty or has mismatched lengths")
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "logdirichlet"
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        x, y = np.asarray(x, float), np.asarray(y, float)
        if step:
            ax.step(x, y, where="post", label=label)
        else:
            ax.plot(x, y, marker="o" if len(x) <= 32 else None, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    # fixed metadata keeps the SVG reproducible
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
