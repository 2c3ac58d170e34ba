"""SVG figures: solution profiles and residual heat maps."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .accuracy import ResidualGrid, ansatz_jet


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "varsol"
    import matplotlib.pyplot as plt

    return plt


def profile_svg(results, path: Path, z: np.ndarray | None = None) -> None:
    """u(z) for each result, one line per root."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in results:
        width = np.sqrt(abs(r.s))
        grid = z if z is not None else np.linspace(-4 * width, 4 * width, 401)
        ax.plot(grid, ansatz_jet(r.params, grid).u0, label=f"A={r.A:.6g}, s={r.s:.6g}")
    ax.set_xlabel("z")
    ax.set_ylabel("u(z)")
    if results:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def heatmap_svg(grid: ResidualGrid, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    data = np.ma.masked_invalid(grid.values)
    extent = (grid.axis_values[0], grid.axis_values[-1], grid.z[0], grid.z[-1])
    lo, hi = (float(data.min()), float(data.max())) if data.count() else (0.0, 1.0)
    image = ax.imshow(data, origin="lower", aspect="auto", extent=extent, cmap="viridis", vmin=lo, vmax=hi)
    fig.colorbar(image, ax=ax, label="|residual|")
    ax.set_xlabel(grid.axis_name)
    ax.set_ylabel("z")
    ax.set_title(f"min {lo:.4g}   max {hi:.4g}", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
