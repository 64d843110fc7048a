"""Optional figure rendering for the CLI report path.

All functions write PNG files next to the delimited output and return the
paths written. matplotlib is imported lazily with the Agg backend so the
library works headless and without matplotlib installed unless plotting is
requested.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_run(traj, outdir) -> list[Path]:
    """Residuals and objective versus time for a single run."""
    plt = _pyplot()
    outdir = Path(outdir)
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(traj.times, np.maximum(traj.feasibility, 1e-16), label="constraint residual")
    ax.semilogy(traj.times, np.maximum(traj.stationarity, 1e-16), label="stationarity residual")
    if traj.reach_time is not None:
        ax.axvline(traj.reach_time, color="gray", linestyle="--", label="manifold reach")
    ax.set_xlabel("time")
    ax.set_ylabel("residual")
    ax.legend()
    fig.tight_layout()
    path = outdir / "residuals.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(traj.times, traj.objective)
    ax.set_xlabel("time")
    ax.set_ylabel("objective")
    fig.tight_layout()
    path = outdir / "objective.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def render_sweep(result, reach_bound: float, outdir) -> list[Path]:
    """Reach time against initial-condition radius, with the settling bound."""
    plt = _pyplot()
    outdir = Path(outdir)
    radii = np.array([np.linalg.norm(r.x0) for r in result.rows])
    reach = np.array([np.nan if r.reach_time is None else r.reach_time for r in result.rows])

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogx(radii, reach, "o", markersize=3, label="measured reach time")
    ax.axhline(reach_bound, color="tab:red", linestyle="--", label="settling bound")
    ax.set_xlabel("initial-condition radius")
    ax.set_ylabel("reach time")
    ax.legend()
    fig.tight_layout()
    path = outdir / "sweep.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def render_compare(fxts_traj, pgf_traj, outdir) -> list[Path]:
    """Side-by-side residual decay for the sliding-mode flow vs the baseline."""
    plt = _pyplot()
    outdir = Path(outdir)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5), sharey=True)
    for ax, field, title in (
        (axes[0], "feasibility", "constraint residual"),
        (axes[1], "stationarity", "stationarity residual"),
    ):
        ax.semilogy(fxts_traj.times, np.maximum(getattr(fxts_traj, field), 1e-16),
                    label="fixed-time flow")
        ax.semilogy(pgf_traj.times, np.maximum(getattr(pgf_traj, field), 1e-16),
                    label="projected-gradient baseline")
        ax.set_xlabel("time")
        ax.set_title(title)
    axes[0].set_ylabel("residual")
    axes[0].legend()
    fig.tight_layout()
    path = outdir / "compare.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
