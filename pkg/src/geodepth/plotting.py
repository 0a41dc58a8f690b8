"""Figures for the curve, scatter and noise reports. Always rendered off-screen."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (4.5, 3.0),
    "savefig.dpi": 150,
}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_curve(points, path, xlabel: str, ylabel: str, title: str | None = None) -> None:
    xs = [p.x for p in points if p.n > 0]
    ys = [p.y for p in points if p.n > 0]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(alpha=0.3)
        _finish(fig, path)


def plot_scatter(rows, path) -> None:
    """``rows`` are (image_id, median_gt, median_pred) triples."""
    gt = np.array([r[1] for r in rows], dtype=float)
    pred = np.array([r[2] for r in rows], dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(3.5, 3.5))
        ax.scatter(gt, pred, s=8, alpha=0.7)
        hi = float(max(gt.max(), pred.max())) if gt.size else 1.0
        ax.plot([0, hi], [0, hi], color="0.5", linewidth=0.8, linestyle="--")
        ax.set_xlabel("median ground-truth depth (m)")
        ax.set_ylabel("median predicted depth (m)")
        ax.set_aspect("equal", adjustable="box")
        _finish(fig, path)


def plot_noise(deltas, theta: float, path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.hist(np.asarray(deltas), bins=41, range=(-theta, theta) if theta > 0 else None,
                color="0.35")
        ax.axvline(float(np.mean(np.abs(deltas))), color="C3", linewidth=1, label="mean |offset|")
        ax.set_xlabel("heading offset (deg)")
        ax.set_ylabel("draws")
        ax.legend(frameon=False)
        _finish(fig, path)
