"""Figure rendering for regions and runtime tables.

Uses the non-interactive Agg backend so figures render identically in
terminals, CI, and containers. All functions write a file and return its
path; nothing is shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _draw_hull(ax, vertices: np.ndarray, label: str | None, color: str,
               fill: bool = True, style: str = "-") -> None:
    v = np.asarray(vertices, dtype=float)
    if v.size == 0:
        return
    if v.shape[0] == 1:
        ax.plot(v[0, 0], v[0, 1], "o", color=color, label=label)
        return
    closed = np.vstack([v, v[:1]])
    ax.plot(closed[:, 0], closed[:, 1], style, color=color, lw=1.6, label=label)
    if fill and v.shape[0] >= 3:
        ax.fill(closed[:, 0], closed[:, 1], color=color, alpha=0.15, lw=0)


def region_figure(hulls: list[tuple[str, np.ndarray]], xlabel: str, ylabel: str,
                  path: str | Path, title: str | None = None) -> Path:
    """One axes with several labeled hull outlines."""
    fig, ax = plt.subplots(figsize=(5.2, 4.4), constrained_layout=True)
    styles = ("-", "--", "-.", ":")
    for i, (label, verts) in enumerate(hulls):
        _draw_hull(ax, verts, label, _COLORS[i % len(_COLORS)],
                   fill=(i == 0), style=styles[i % len(styles)])
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(hulls) > 1 or (hulls and hulls[0][0]):
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def pair_grid_figure(panels: list[tuple[str, str, np.ndarray]],
                     path: str | Path, suptitle: str | None = None) -> Path:
    """Grid of hull panels, one per coordinate pair."""
    n = max(1, len(panels))
    ncols = min(4, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.1 * ncols, 2.9 * nrows),
                             constrained_layout=True, squeeze=False)
    for i, (xlabel, ylabel, verts) in enumerate(panels):
        ax = axes[i // ncols][i % ncols]
        _draw_hull(ax, verts, None, _COLORS[i % len(_COLORS)])
        ax.set_xlabel(xlabel, fontsize=8)
        ax.set_ylabel(ylabel, fontsize=8)
        ax.tick_params(labelsize=7)
        ax.grid(True, alpha=0.3)
    for j in range(len(panels), nrows * ncols):
        axes[j // ncols][j % ncols].set_visible(False)
    if suptitle:
        fig.suptitle(suptitle)
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def runtime_figure(horizons: list[int], series: dict[str, list[float]],
                   path: str | Path, title: str | None = None) -> Path:
    """Runtime-versus-horizon lines on a log time axis."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0), constrained_layout=True)
    for i, (label, values) in enumerate(series.items()):
        xs = [h for h, v in zip(horizons, values) if v is not None]
        ys = [v for v in values if v is not None]
        if not ys:
            continue
        ax.plot(xs, ys, "o-", color=_COLORS[i % len(_COLORS)], label=label)
    ax.set_yscale("log")
    ax.set_xlabel("horizon (steps)")
    ax.set_ylabel("seconds")
    ax.set_xticks(horizons)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
