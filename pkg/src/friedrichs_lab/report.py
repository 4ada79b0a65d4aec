"""Figure rendering for CLI runs.

All figures are written to files (Agg backend, no display); the
delimited CSV/JSON outputs remain the machine-readable contract and the
figures sit alongside them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from .functionals import EigenPair  # noqa: E402
from .resonant import ResonantSolution  # noqa: E402

__all__ = [
    "render_eigenfunction",
    "render_gridfunction",
    "render_ratio_histogram",
    "render_separation_sweep",
    "render_energy_history",
]


def render_gridfunction(u, path, title: str = "") -> None:
    """Plot a grid function: a curve in 1D, a filled triangulation in 2D."""
    g = u.grid
    fig, ax = plt.subplots(figsize=(6, 4))
    if g.dim == 1:
        ax.plot(g.nodes[:, 0], u.values, "-")
        ax.set_xlabel("x")
    else:
        tri = mtri.Triangulation(g.nodes[:, 0], g.nodes[:, 1], g.elements)
        tpc = ax.tripcolor(tri, u.values, shading="gouraud")
        fig.colorbar(tpc, ax=ax)
        ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_eigenfunction(pair: EigenPair, path) -> None:
    render_gridfunction(
        pair.phi1, path,
        title=f"ground state, lambda1 = {pair.lambda1:.8g}")


def render_ratio_histogram(report, path) -> None:
    """Histogram of per-sample LHS/RHS ratios for one inequality."""
    ratios = report.ratios
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.log10(ratios[ratios > 0]), bins=40)
    ax.axvline(np.log10(report.min_ratio), color="red", linestyle="--",
               label=f"min = {report.min_ratio:.4g}")
    ax.set_xlabel("log10(LHS / RHS)")
    ax.set_ylabel("samples")
    ax.set_title(report.inequality)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_separation_sweep(results, lambda1: float, path) -> None:
    """Separation constant against gamma, with the lambda1 baseline."""
    gammas = [r.gamma for r in results]
    values = [r.value for r in results]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(gammas, values, "o-", label="separation constant")
    ax.axhline(lambda1, color="gray", linestyle=":", label="lambda1")
    ax.set_xlabel("gamma")
    ax.set_ylabel("constrained infimum")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_energy_history(solution: ResonantSolution, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(solution.energy_history, "-")
    ax.set_xlabel("accepted step")
    ax.set_ylabel("energy")
    ax.set_title(f"final energy = {solution.energy:.6g}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
