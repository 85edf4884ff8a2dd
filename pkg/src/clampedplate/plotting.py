"""Static figures written next to the CLI's tabular output.

Figures are drawn on the Agg canvas directly (no pyplot state), so repeated
runs give identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .fdsolver import BoundaryFit, ScalarField

__all__ = ["save_field", "save_curves", "save_boundary_trace", "save_ball_table"]

_DPI = 120
_META = {"Software": None}


def _new(width=5.0, height=4.0):
    fig = Figure(figsize=(width, height), dpi=_DPI)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return fig, ax


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    return path


def save_field(field: ScalarField, path, title: str = "", show_boundary: bool = True) -> Path:
    """Colour map of a grid field, blank outside the domain."""
    dom = field.domain
    grid = field.to_grid(fill=np.nan)
    ny, nx = dom.shape
    extent = (
        dom.origin[0] - 0.5 * dom.h, dom.origin[0] + (nx - 0.5) * dom.h,
        dom.origin[1] - 0.5 * dom.h, dom.origin[1] + (ny - 0.5) * dom.h,
    )
    fig, ax = _new(5.0, 4.2)
    im = ax.imshow(grid, origin="lower", extent=extent, cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    if show_boundary:
        foot = dom.ring_foot
        ax.plot(foot[:, 0], foot[:, 1], ".", ms=1.0, color="k")
    ax.set_aspect("equal")
    ax.set_title(title)
    return _save(fig, path)


def save_curves(path, curves: Sequence[tuple], xlabel: str, ylabel: str, title: str = "") -> Path:
    """Line plot of ``(x, y, label)`` curves."""
    fig, ax = _new()
    for x, y, label in curves:
        ax.plot(x, y, lw=1.4, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if any(label for *_, label in curves):
        ax.legend(frameon=False)
    return _save(fig, path)


def save_boundary_trace(fit: BoundaryFit, alpha: float, path, title: str = "") -> Path:
    """``|Delta u|`` at the boundary feet against polar angle, with alpha."""
    ang = np.arctan2(fit.foot[:, 1], fit.foot[:, 0])
    fig, ax = _new(5.5, 3.5)
    for c in np.unique(fit.component):
        sel = fit.component == c
        order = np.argsort(ang[sel])
        ax.plot(ang[sel][order], np.abs(fit.laplacian[sel][order]), ".", ms=2.0,
                label=f"component {c}")
    ax.axhline(alpha, color="k", lw=0.8, ls="--", label="alpha")
    ax.set_xlabel("polar angle of boundary point")
    ax.set_ylabel("|Laplacian of u|")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def save_ball_table(dims, means, path) -> Path:
    """The ball mean and its square against dimension."""
    means = np.abs(np.asarray(means, dtype=float))
    fig, ax = _new(5.0, 3.5)
    ax.plot(dims, means, "o-", label="|mean of ball mode|")
    ax.plot(dims, means**2, "s--", label="squared")
    ax.set_xlabel("dimension d")
    ax.legend(frameon=False)
    return _save(fig, path)
