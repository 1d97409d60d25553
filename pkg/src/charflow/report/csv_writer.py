"""CSV artifacts for constraint data, grid fields and physical samples.

Floats are written with ``repr`` so a re-read reproduces the arrays exactly
and identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from charflow.fs.exports import safe_write_text
from charflow.solver.constraints import CharacteristicData
from charflow.solver.goursat import GoursatGrid
from charflow.solver.hodograph import PhysicalField, Raster

LOGGER = logging.getLogger(__name__)

CHARACTERISTIC_COLUMNS = ("side", "param", "alpha", "beta", "t", "r", "mu", "nu", "gamma", "delta")
GRID_FIELDS = ("alpha", "beta", "t", "r", "mu", "nu", "valid")


def format_value(value: object) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))  # type: ignore[arg-type]


def _render(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([value if isinstance(value, str) else format_value(value) for value in row])
    return buffer.getvalue()


def write_characteristic_data(cp: CharacteristicData, cm: CharacteristicData, out_dir: Path) -> Path:
    """C+ rows then C- rows under one header."""

    def rows():
        for cd in (cp, cm):
            for k in range(cd.n):
                yield [cd.side.value] + [getattr(cd, name)[k] for name in CHARACTERISTIC_COLUMNS[1:]]

    return safe_write_text(out_dir / "characteristic_data.csv", _render(CHARACTERISTIC_COLUMNS, rows()))


def write_grid_fields(grid: GoursatGrid, out_dir: Path, names: Sequence[str] = GRID_FIELDS) -> List[Path]:
    written: List[Path] = []
    nu1, nv1 = grid.shape
    for name in names:
        values = grid.field(name)

        def rows(values: np.ndarray = values):
            for i in range(nu1):
                for j in range(nv1):
                    yield (i, j, grid.u_grid[i], grid.v_grid[j], values[i, j])

        written.append(safe_write_text(out_dir / f"field_{name}.csv", _render(("i", "j", "u", "v", "value"), rows())))
    LOGGER.debug("Wrote %d grid field files to %s", len(written), out_dir)
    return written


def write_physical(physical: PhysicalField, out_dir: Path) -> Path:
    rows = zip(physical.t, physical.r, physical.rho, physical.w, physical.p, physical.valid)
    return safe_write_text(out_dir / "physical.csv", _render(("t", "r", "rho", "w", "p", "valid"), rows))


def write_raster(raster: Raster, out_dir: Path) -> Path:
    def rows():
        for k, t in enumerate(raster.t_axis):
            for m, r in enumerate(raster.r_axis):
                yield (k, m, t, r, raster.rho[k, m], raster.w[k, m], raster.p[k, m], raster.valid[k, m])

    return safe_write_text(out_dir / "raster.csv", _render(("k", "m", "t", "r", "rho", "w", "p", "valid"), rows()))


def read_field(path: Path) -> np.ndarray:
    """Load a ``field_<name>.csv`` back into its ``(nu+1, nv+1)`` array."""
    table = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float, ndmin=2)
    rows = table[:, 0].astype(int)
    cols = table[:, 1].astype(int)
    values = np.empty((rows.max() + 1, cols.max() + 1))
    values[rows, cols] = table[:, 4]
    return values


__all__ = [
    "CHARACTERISTIC_COLUMNS",
    "GRID_FIELDS",
    "format_value",
    "write_characteristic_data",
    "write_grid_fields",
    "write_physical",
    "write_raster",
    "read_field",
]
