"""Gnuplot-ready data blocks: one block per u-line, columns ``t r value``."""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

import numpy as np

from charflow.fs.exports import safe_write_text
from charflow.solver.goursat import GoursatGrid

PLOT_FIELDS = ("alpha", "beta", "mu", "nu")


def plot_block(grid: GoursatGrid, name: str) -> str:
    values = grid.field(name)
    blocks: List[str] = []
    for i in range(grid.shape[0]):
        lines = [
            f"{float(grid.t[i, j])!r} {float(grid.r[i, j])!r} {float(values[i, j])!r}"
            for j in range(grid.shape[1])
            if grid.valid[i, j] and np.isfinite(values[i, j])
        ]
        if lines:
            blocks.append(f"# u={float(grid.u_grid[i])!r}\n" + "\n".join(lines) + "\n")
    return "\n".join(blocks)


def write_plot_data(grid: GoursatGrid, out_dir: Path, names: Sequence[str] = PLOT_FIELDS) -> List[Path]:
    return [safe_write_text(out_dir / f"plot_{name}.dat", plot_block(grid, name)) for name in names]


__all__ = ["PLOT_FIELDS", "plot_block", "write_plot_data"]
