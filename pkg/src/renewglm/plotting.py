"""
Figures for experiment records.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def get_plot(width=7, height=None):
    """A figure/axes pair with readable default font sizes."""
    height = height or width * 0.62
    fig, ax = plt.subplots(figsize=(width, height), facecolor="w")
    ax.tick_params(labelsize=width * 1.4)
    return fig, ax


def plot_l2_curves(series, path, title=None):
    """
    Plot mean squared l2 error against cumulative sample size.

    Args:
        series: mapping method -> list of (N, mean_l2_sq) pairs, sorted by N.
        path: output image file; the format follows its extension.
    """
    fig, ax = get_plot()
    for method, points in sorted(series.items()):
        xs = [pt[0] for pt in points]
        ys = [pt[1] for pt in points]
        marker = "o" if len(xs) < 30 else None
        ax.plot(xs, ys, marker=marker, markersize=3, linewidth=1.4, label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("cumulative sample size N", fontsize=11)
    ax.set_ylabel("mean squared $\\ell_2$ error", fontsize=11)
    if title:
        ax.set_title(title, fontsize=12)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
