"""Figure rendering for benchmark and basin reports.

Figures are written next to the delimited output files by the CLI;
everything here uses the Agg backend so it works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_benchmark_figures", "render_basin_figure"]

_SOLVER_COLORS = {"scf": "tab:blue", "gn": "tab:orange", "lm": "tab:green"}


def render_benchmark_figures(rows, out_dir) -> list:
    """Rotation-error CDFs per noise scale plus a runtime summary chart.

    Returns the list of files written.
    """
    sigmas = sorted({r.sigma_m for r in rows})
    solvers = sorted({r.solver for r in rows})
    written = []

    fig, axes = plt.subplots(1, len(sigmas), figsize=(4 * len(sigmas), 3.2), squeeze=False)
    for ax, sigma in zip(axes[0], sigmas):
        for solver in solvers:
            errs = np.sort(
                [r.rotation_error_deg for r in rows if r.solver == solver and r.sigma_m == sigma]
            )
            if errs.size == 0:
                continue
            cdf = np.arange(1, errs.size + 1) / errs.size
            ax.plot(errs, cdf, label=solver, color=_SOLVER_COLORS.get(solver))
            certed = np.sort(
                [
                    r.rotation_error_deg
                    for r in rows
                    if r.solver == solver and r.sigma_m == sigma and r.certified
                ]
            )
            if certed.size:
                ax.plot(
                    certed,
                    np.arange(1, certed.size + 1) / certed.size,
                    "--",
                    color=_SOLVER_COLORS.get(solver),
                    alpha=0.6,
                    label=f"{solver} (certified)",
                )
        ax.set_xscale("log")
        ax.set_xlabel("rotation error [deg]")
        ax.set_title(f"sigma_m = {sigma}")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("fraction of trials")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    path = str(out_dir / "rotation_errors.png") if hasattr(out_dir, "__truediv__") else out_dir
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    width = 0.8 / max(len(sigmas), 1)
    xs = np.arange(len(solvers))
    for j, sigma in enumerate(sigmas):
        means = [
            1e3
            * np.mean(
                [r.runtime_s for r in rows if r.solver == s and r.sigma_m == sigma] or [np.nan]
            )
            for s in solvers
        ]
        ax.bar(xs + j * width, means, width, label=f"sigma_m={sigma}")
    ax.set_xticks(xs + width * (len(sigmas) - 1) / 2)
    ax.set_xticklabels(solvers)
    ax.set_ylabel("mean solver runtime [ms]")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    rpath = str(out_dir / "runtimes.png") if hasattr(out_dir, "__truediv__") else out_dir
    fig.savefig(rpath, dpi=150)
    plt.close(fig)
    written.append(rpath)
    return written


def render_basin_figure(rows, path) -> None:
    """Scatter of stereographically projected inits colored by basin label."""
    labels = sorted({r["label"] for r in rows})
    fig = plt.figure(figsize=(5, 4.5))
    ax = fig.add_subplot(111, projection="3d")
    for lab in labels:
        pts = np.array([[r["proj_x"], r["proj_y"], r["proj_z"]] for r in rows if r["label"] == lab])
        ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=8, alpha=0.7, label=f"min {lab}")
    ax.set_xlim(-1, 1)
    ax.set_ylim(-1, 1)
    ax.set_zlim(-1, 1)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.legend(fontsize=8, loc="upper left")
    ax.set_title("initialization basins (unit-ball projection)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
