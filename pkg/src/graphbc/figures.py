"""File-output matplotlib renderings for simulation and sweep reports.

Backend is pinned to Agg; every function writes one figure file and returns
the path.  Nothing here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be pinned first
import numpy as np  # noqa: E402

MAX_DRAWN_VERTICES = 64


def error_trend_figure(path, n_values, mean_errors, per_seed=None,
                       title="estimated error rate vs block length"):
    """Seed-mean error estimates per block length, with faint per-seed dots."""
    n_values = list(n_values)
    mean_errors = list(mean_errors)
    if len(n_values) != len(mean_errors):
        raise ValueError("one mean per block length required")
    fig, ax = plt.subplots(figsize=(5.2, 3.5))
    if per_seed is not None:
        if len(per_seed) != len(n_values):
            raise ValueError("one seed list per block length required")
        for n, errs in zip(n_values, per_seed):
            ax.plot([n] * len(errs), errs, "o", color="tab:gray", alpha=0.35,
                    markersize=3, zorder=1)
    ax.plot(n_values, mean_errors, "o-", color="tab:blue", zorder=2,
            label="seed mean")
    ax.set_xlabel("block length n")
    ax.set_ylabel("estimated error rate")
    ax.set_xticks(n_values)
    ax.set_ylim(bottom=0.0)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def degree_histogram_figure(path, left_degrees, right_degrees,
                            left_band=None, right_band=None,
                            title="interface graph degree profile"):
    """Side-by-side degree histograms; optional admissible bands as lines."""
    left = np.asarray(left_degrees)
    right = np.asarray(right_degrees)
    fig, axes = plt.subplots(1, 2, figsize=(7.2, 3.2), sharey=True)
    for ax, degrees, band, label in ((axes[0], left, left_band, "left side"),
                                     (axes[1], right, right_band,
                                      "right side")):
        if degrees.size:
            top = int(degrees.max())
            bins = np.arange(-0.5, top + 1.5)
            ax.hist(degrees, bins=bins, color="tab:blue", alpha=0.8)
        if band is not None:
            lo, hi = band
            ax.axvline(lo, color="tab:red", linestyle="--", linewidth=1)
            ax.axvline(hi, color="tab:red", linestyle="--", linewidth=1)
        ax.set_xlabel(f"{label} degree")
    axes[0].set_ylabel("vertices")
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_trajectory_figure(path, grid, rate_series, edge_counts,
                            title="rate and edge-count trajectory"):
    """Rate components on the left axis, edge counts (log) on the right.

    ``rate_series`` maps a label to one value per grid point.
    """
    grid = list(grid)
    for label, values in rate_series.items():
        if len(values) != len(grid):
            raise ValueError(f"series {label!r} length does not match grid")
    if len(edge_counts) != len(grid):
        raise ValueError("edge-count length does not match grid")
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for label, values in rate_series.items():
        ax.plot(grid, values, "o-", markersize=3, label=label)
    ax.set_xlabel("layer mixing parameter")
    ax.set_ylabel("bits per sample")
    ax.legend(loc="upper left", fontsize=7)
    twin = ax.twinx()
    counts = np.maximum(np.asarray(edge_counts, dtype=float), 1.0)
    twin.semilogy(grid, counts, "s--", color="tab:red", markersize=3,
                  label="edges")
    twin.set_ylabel("edge count", color="tab:red")
    twin.tick_params(axis="y", labelcolor="tab:red")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def slack_bar_figure(path, names, slacks, tol=0.0,
                     title="constraint slack at the queried point"):
    """Horizontal slack bars; anything below -tol is drawn in red."""
    names = list(names)
    slacks = list(slacks)
    if len(names) != len(slacks):
        raise ValueError("one slack per constraint name required")
    fig, ax = plt.subplots(figsize=(5.6, 0.6 + 0.45 * max(len(names), 1)))
    ypos = np.arange(len(names))
    colors = ["tab:red" if s < -tol else "tab:green" for s in slacks]
    ax.barh(ypos, slacks, color=colors, alpha=0.85)
    ax.axvline(0.0, color="black", linewidth=1)
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("slack (bits)")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def graph_pair_figure(path, first, second,
                      labels=("first graph", "second graph")):
    """Two small bipartite graphs drawn side by side, vertices as columns."""
    for graph in (first, second):
        if graph.v1_size + graph.v2_size > MAX_DRAWN_VERTICES:
            raise ValueError("graph too large to draw")
    fig, axes = plt.subplots(1, 2, figsize=(6.4, 3.2))
    for ax, graph, label in zip(axes, (first, second), labels):
        for u, v in graph.edges():
            ax.plot([0.0, 1.0], [-int(u), -int(v)], color="tab:blue",
                    linewidth=1.2, zorder=1)
        ax.scatter([0.0] * graph.v1_size,
                   [-(i + 1) for i in range(graph.v1_size)],
                   s=120, color="white", edgecolor="black", zorder=2)
        ax.scatter([1.0] * graph.v2_size,
                   [-(j + 1) for j in range(graph.v2_size)],
                   s=120, color="white", edgecolor="black", zorder=2)
        for i in range(graph.v1_size):
            ax.text(0.0, -(i + 1), str(i + 1), ha="center", va="center",
                    fontsize=7, zorder=3)
        for j in range(graph.v2_size):
            ax.text(1.0, -(j + 1), str(j + 1), ha="center", va="center",
                    fontsize=7, zorder=3)
        ax.set_title(label, fontsize=9)
        ax.set_xlim(-0.4, 1.4)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
