"""Static figures drawn from CSV output only (matplotlib is imported lazily)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _read(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def render_sweep(csv_path, png_path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = _read(csv_path)
    col = {h: i for i, h in enumerate(header)}
    eta = float(rows[0][col["eta"]])
    xk, yk = ("alpha_c", "q") if eta == 1.0 else ("alpha_l", "alpha_c")
    xs = sorted({float(r[col[xk]]) for r in rows})
    ys = sorted({float(r[col[yk]]) for r in rows})
    grid = np.full((len(ys), len(xs)), np.nan)
    for r in rows:
        grid[ys.index(float(r[col[yk]])), xs.index(float(r[col[xk]]))] = float(r[col["ergotropy"]])
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="ergotropy")
    top = np.nanmax(grid)
    if top > 0 and len(xs) > 1 and len(ys) > 1:
        ax.contour(xs, ys, grid, levels=[1e-9 * top], colors="w", linewidths=0.8)
    ax.set_xlabel(xk)
    ax.set_ylabel(yk)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def render_trajectories(csv_paths, labels, png_path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for path, label in zip(csv_paths, labels):
        header, rows = _read(path)
        if not rows:
            continue
        col = {h: i for i, h in enumerate(header)}
        x = [float(r[col["gamma_c_t"]]) for r in rows]
        w = [float(r[col["ergotropy"]]) for r in rows]
        ax.plot(x, w, label=label)
    ax.set_xscale("symlog", linthresh=1e-2)
    ax.set_xlabel("gamma_c t")
    ax.set_ylabel("ergotropy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(png_path), dpi=120)
    plt.close(fig)
