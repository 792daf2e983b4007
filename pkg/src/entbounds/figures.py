"""Figure rendering for the CLI report paths.

Every report command writes columnar CSV first; these helpers render a
matplotlib view of the same data next to it.  The Agg backend keeps
rendering headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.figsize": (6.0, 4.5),
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
    }
)


def save_histogram(bin_left, freq, path, xlabel="constraint gap", title=None):
    fig, ax = plt.subplots()
    width = bin_left[1] - bin_left[0] if len(bin_left) > 1 else 1.0
    ax.bar(bin_left, freq, width=width, align="edge", color="#3465a4")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("frequency")
    if title:
        ax.set_title(title)
    fig.savefig(path)
    plt.close(fig)
    return path


def save_curves(x, curves, path, xlabel, ylabel, title=None):
    """``curves`` maps legend label -> y array."""
    fig, ax = plt.subplots()
    for label, y in curves.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend()
    if title:
        ax.set_title(title)
    fig.savefig(path)
    plt.close(fig)
    return path


def save_region_boundaries(xs, lower, upper, path):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(xs, lower, label="lower boundary")
    ax.plot(xs, upper, label="upper boundary")
    ax.fill_between(xs, lower, upper, alpha=0.2)
    ax.set_xlabel("n_phi constraint")
    ax.set_ylabel("n_T")
    ax.set_xlim(0, 1.5)
    ax.set_ylim(0, 1.5)
    ax.legend()
    ax.set_title("pure-state region")
    fig.savefig(path)
    plt.close(fig)
    return path


def save_comparison_map(xs, ys, labels, path, title):
    """Two-region map: which constraint wins at each plane point."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    z = (np.asarray(labels) == "NPHI").astype(float)
    ax.imshow(
        z.T,
        origin="lower",
        extent=(xs[0], xs[-1], ys[0], ys[-1]),
        aspect="equal",
        cmap="coolwarm",
        vmin=0,
        vmax=1,
    )
    ax.set_xlabel("n_phi constraint")
    ax.set_ylabel("n_T")
    ax.set_title(title + " (red: flip-map bound wins)")
    fig.savefig(path)
    plt.close(fig)
    return path


def save_surface_figure(surface, path):
    """Heatmap plus contours of a bound surface."""
    g = surface.grid
    fig, ax = plt.subplots(figsize=(5.6, 5.0))
    im = ax.imshow(
        g.values.T,
        origin="lower",
        extent=(g.xs[0], g.xs[-1], g.ys[0], g.ys[-1]),
        aspect="equal",
        cmap="viridis",
    )
    cs = ax.contour(g.xs, g.ys, g.values.T, levels=10, colors="white", linewidths=0.6)
    ax.clabel(cs, inline=True, fontsize=6)
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("n_phi constraint")
    ax.set_ylabel("n_T")
    ax.set_title(f"doubly-constrained {surface.measure.value} bound")
    fig.savefig(path)
    plt.close(fig)
    return path
