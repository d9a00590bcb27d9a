"""Figure rendering for simulation output.

Plots are written straight to files (Agg backend, no display); the CLI
calls these next to its CSV writers so every run leaves both a delimited
and a visual record.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .sim1d import RunResult  # noqa: E402


def render_series(result: RunResult, path: str) -> None:
    """Slope growth and ball distance against time, one PNG."""
    fig, (ax_slope, ax_ball) = plt.subplots(
        2, 1, figsize=(7.0, 6.0), sharex=True)
    t = result.times
    ax_slope.semilogy(t, np.maximum(result.max_slope_u, 1e-300),
                      label="max |du/dx|")
    ax_slope.semilogy(t, np.maximum(result.max_slope_all, 1e-300),
                      label="max slope, all fields", linestyle="--")
    if result.t_blowup_estimate is not None:
        ax_slope.axvline(result.t_blowup_estimate, color="tab:red",
                         linewidth=0.8, label="t_blowup estimate")
    ax_slope.set_ylabel("max slope")
    ax_slope.legend(loc="best", fontsize="small")
    ax_slope.set_title(f"status: {result.status}")
    ax_ball.plot(t, result.ball_dist)
    ax_ball.set_xlabel("t")
    ax_ball.set_ylabel("sup distance from reference")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_snapshots(snapshots: Sequence[Tuple[float, np.ndarray]],
                     x: np.ndarray, fields: Sequence[str],
                     path: str) -> None:
    """Overlaid field profiles at the recorded snapshot times, one PNG."""
    if not snapshots:
        raise ValueError("no snapshots to render")
    n_fields = len(fields)
    fig, axes = plt.subplots(n_fields, 1, figsize=(7.0, 2.0 * n_fields),
                             sharex=True, squeeze=False)
    cmap = plt.get_cmap("viridis")
    t_max = max(t for t, _ in snapshots) or 1.0
    for t, V in snapshots:
        color = cmap(0.85 * t / t_max)
        for i in range(n_fields):
            axes[i, 0].plot(x, V[i], color=color, linewidth=0.8)
    for i, name in enumerate(fields):
        axes[i, 0].set_ylabel(name)
    axes[-1, 0].set_xlabel("x")
    axes[0, 0].set_title(
        f"{len(snapshots)} snapshots, t in [0, {t_max:.4g}]")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_scan(taus: np.ndarray, thetas: np.ndarray, values: np.ndarray,
                path: str, mode: str = "fast") -> None:
    """Nonlinearity values over the (tau, theta) grid, one PNG."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if len(thetas) == 1:
        ax.plot(taus, values[0], marker=".")
        ax.axhline(0.0, color="k", linewidth=0.6)
        ax.set_xlabel("tau")
        ax.set_ylabel(f"nonlinearity ({mode} mode)")
        ax.set_title(f"theta = {float(thetas[0]):.4g}")
    else:
        pcm = ax.pcolormesh(taus, thetas, values, shading="nearest",
                            cmap="RdBu_r")
        fig.colorbar(pcm, ax=ax, label=f"nonlinearity ({mode} mode)")
        ax.set_xlabel("tau")
        ax.set_ylabel("theta")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
