"""Report figures rendered straight to files.

Only the Agg backend is used; nothing here opens a window. Each figure
goes to its own PDF in the chosen directory and the list of written
paths comes back for the caller's report.
"""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sim import SimTrace

FIGURE_DPI = 150


def plot_trajectories(trace: SimTrace, ax=None):
    if ax is None:
        _, ax = plt.subplots(figsize=(6.0, 6.0))
    n = trace.poses.shape[1]
    for i in range(n):
        line, = ax.plot(trace.poses[:, i, 0], trace.poses[:, i, 1], lw=1.0,
                        label=f"agent {i + 1}")
        ax.plot(trace.poses[0, i, 0], trace.poses[0, i, 1], "o", ms=4, color=line.get_color())
        ax.plot(trace.poses[-1, i, 0], trace.poses[-1, i, 1], "s", ms=4, color=line.get_color())
    ax.plot(trace.target[:, 0], trace.target[:, 1], "k--", lw=1.2, label="target")
    ax.plot(trace.target[-1, 0], trace.target[-1, 1], "k*", ms=9)
    # final enclosure: radial spokes from the last target position
    for i in range(n):
        ax.plot([trace.target[-1, 0], trace.poses[-1, i, 0]],
                [trace.target[-1, 1], trace.poses[-1, i, 1]],
                color="0.7", lw=0.6, zorder=0)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(fontsize=8, loc="best")
    ax.set_title("planar trajectories")
    return ax


def plot_heading_errors(trace: SimTrace, ax=None):
    if ax is None:
        _, ax = plt.subplots(figsize=(6.4, 3.6))
    bounds_deg = np.rad2deg(trace.scenario.gains.heading_bound)
    n = trace.e_theta.shape[1]
    for i in range(n):
        line, = ax.plot(trace.t, np.rad2deg(trace.e_theta[:, i]), lw=1.0,
                        label=f"agent {i + 1}")
        ax.axhline(bounds_deg[i], color=line.get_color(), ls="--", lw=0.6, alpha=0.5)
        ax.axhline(-bounds_deg[i], color=line.get_color(), ls="--", lw=0.6, alpha=0.5)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("heading error [deg]")
    ax.legend(fontsize=8, ncol=min(n, 3))
    ax.set_title("heading errors and their bounds")
    return ax


def plot_velocities(trace: SimTrace, axes=None):
    if axes is None:
        _, axes = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True)
    headings = trace.poses[:, :, 2]
    px = trace.v * np.cos(headings)
    py = trace.v * np.sin(headings)
    v0 = trace.scenario.motion.velocity(trace.t)
    n = px.shape[1]
    for k, (comp, label) in enumerate(((px, "x velocity [m/s]"), (py, "y velocity [m/s]"))):
        for i in range(n):
            axes[k].plot(trace.t, comp[:, i], lw=0.9, label=f"agent {i + 1}" if k == 0 else None)
        axes[k].plot(trace.t, v0[:, k], "k--", lw=1.2, label="target" if k == 0 else None)
        axes[k].set_ylabel(label)
    axes[0].legend(fontsize=8, ncol=min(n + 1, 3))
    axes[1].set_xlabel("t [s]")
    axes[0].set_title("realized agent velocities against the target")
    return axes


def plot_edge_errors(trace: SimTrace, fig=None):
    edges = trace.scenario.spec.graph.edges
    n_edges = len(edges)
    ncols = 3 if n_edges > 4 else 2
    nrows = math.ceil(n_edges / ncols)
    if fig is None:
        fig, _ = plt.subplots(nrows, ncols, figsize=(3.1 * ncols, 2.3 * nrows),
                              sharex=True, squeeze=False)
    axes = np.asarray(fig.axes).reshape(-1)
    for k, (i, j) in enumerate(edges):
        ax = axes[k]
        ax.plot(trace.t, trace.e[:, k], lw=0.9)
        ax.plot(trace.t, trace.e_bound_upper[:, k], "r--", lw=0.7)
        ax.plot(trace.t, -trace.e_bound_lower[:, k], "r--", lw=0.7)
        other = "target" if j == 0 else f"agent {j}"
        ax.set_title(f"agent {i} to {other}", fontsize=8)
        ax.tick_params(labelsize=7)
    for ax in axes[n_edges:]:
        ax.set_visible(False)
    fig.supxlabel("t [s]", fontsize=9)
    fig.supylabel("distance error [m]", fontsize=9)
    fig.suptitle("edge errors inside their shrinking funnels", fontsize=10)
    return fig


def save_report_figures(trace: SimTrace, outdir) -> list[Path]:
    """Render the four standard figures into outdir, return written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    ax = plot_trajectories(trace)
    written.append(_save(ax.figure, outdir / "trajectories.pdf"))

    ax = plot_heading_errors(trace)
    written.append(_save(ax.figure, outdir / "heading_errors.pdf"))

    axes = plot_velocities(trace)
    written.append(_save(axes[0].figure, outdir / "velocities.pdf"))

    fig = plot_edge_errors(trace)
    written.append(_save(fig, outdir / "edge_errors.pdf"))
    return written


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    return path
