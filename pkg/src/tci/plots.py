"""Report figures rendered headlessly next to the delimited outputs.

Every figure is a plain PNG produced with the Agg backend from data that
is also written as TSV, so the images are a convenience view, never the
only record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 120


def _save(fig, path: str | Path) -> None:
    fig.savefig(str(path), dpi=_DPI, metadata={"Software": None})
    plt.close(fig)


def plot_kde(curves: dict[str, tuple[np.ndarray, np.ndarray]],
             path: str | Path, title: str = "Score density") -> None:
    """One density line per labeled group."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label in sorted(curves):
        grid, dens = curves[label]
        ax.plot(grid, dens, label=label, linewidth=1.5)
    ax.set_xlabel("score")
    ax.set_ylabel("density")
    ax.set_title(title)
    if len(curves) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_trend(groups: list[str], means: list[float], medians: list[float],
               path: str | Path, title: str = "Score trend") -> None:
    """Mean and median of the score per group, in group order."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    x = np.arange(len(groups))
    ax.plot(x, means, marker="o", label="mean", linewidth=1.5)
    ax.plot(x, medians, marker="s", label="median", linewidth=1.5)
    ax.set_xticks(x)
    ax.set_xticklabels(groups, rotation=45, ha="right", fontsize=7)
    ax.set_xlabel("group")
    ax.set_ylabel("score")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_correlation(names: list[str], matrix: np.ndarray,
                     path: str | Path,
                     title: str = "Variant correlations") -> None:
    """Heatmap of a correlation matrix with cell annotations."""
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(names)))
    ax.set_yticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
    ax.set_yticklabels(names, fontsize=7)
    for i in range(len(names)):
        for j in range(len(names)):
            v = matrix[i, j]
            text = "--" if np.isnan(v) else f"{v:.2f}"
            ax.text(j, i, text, ha="center", va="center", fontsize=6)
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
