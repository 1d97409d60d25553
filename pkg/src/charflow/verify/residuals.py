"""Discrete residuals of the characteristic and hodograph equations on a solved grid."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.solver.constraints import CharacteristicData
from charflow.solver.goursat import GoursatGrid
from charflow.solver.numerics import cumtrapz, grad, grad_past_edge

LOGGER = logging.getLogger(__name__)

# threshold = C * spacing**2 for every residual family except boundary pinning
DEFAULT_CONSTANTS: Dict[str, float] = {
    "char_alpha": 50.0,
    "char_beta": 50.0,
    "hodo_v": 50.0,
    "hodo_u": 50.0,
    "t_compat": 50.0,
    "r_u_path": 50.0,
}
BOUNDARY_THRESHOLD = 1e-12
ORDER = 2


@dataclass(slots=True)
class ResidualEntry:
    name: str
    sup: float
    l2: float
    location: Tuple[float, float]
    threshold: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.sup) and self.sup <= self.threshold

    def as_dict(self) -> Dict[str, object]:
        return {
            "sup": self.sup,
            "l2": self.l2,
            "location": list(self.location),
            "threshold": self.threshold,
            "passed": self.passed,
        }


@dataclass(slots=True)
class ResidualReport:
    du: float
    dv: float
    entries: Dict[str, ResidualEntry] = field(default_factory=dict)

    @property
    def spacing(self) -> float:
        return max(self.du, self.dv)

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries.values())

    def sup(self, name: str) -> float:
        return self.entries[name].sup

    def failures(self) -> list[str]:
        return [name for name, entry in self.entries.items() if not entry.passed]

    def as_dict(self) -> Dict[str, object]:
        return {
            "du": self.du,
            "dv": self.dv,
            "passed": self.passed,
            "entries": {name: entry.as_dict() for name, entry in self.entries.items()},
        }


def residual_fields(grid: GoursatGrid, eos: EosModel, geometry: Geometry) -> Dict[str, np.ndarray]:
    """Pointwise residual arrays keyed by family name."""
    du, dv = grid.du, grid.dv
    eta = np.asarray(eos.eta_of_chi_dagger(grid.alpha + grid.beta))
    half_chi = 0.5 * (grid.alpha - grid.beta)
    if geometry.spherical:
        source = -2.0 * eta * half_chi / grid.r
    else:
        source = np.zeros_like(grid.r)
    t_from_left = grid.t[0:1, :] + cumtrapz(grid.mu, du, axis=0)
    return {
        "char_alpha": grad(grid.alpha, dv, 1) - grid.nu * source,
        "char_beta": grad(grid.beta, du, 0) - grid.mu * source,
        "hodo_v": grad(grid.r, dv, 1) - grid.nu * (half_chi + eta),
        "hodo_u": grad_past_edge(grid.r, du, 0) - grid.mu * (half_chi - eta),
        "t_compat": grid.t - t_from_left,
        "r_u_path": grid.r - grid.r_alt,
    }


def boundary_mismatch(grid: GoursatGrid, cp: CharacteristicData, cm: CharacteristicData) -> Tuple[float, Tuple[float, float]]:
    """Largest deviation of the pinned row and column from the characteristic data."""
    worst = 0.0
    where = (0.0, 0.0)
    n_u, n_v = grid.shape
    for name in ("alpha", "beta", "t", "r"):
        along_u = np.abs(getattr(grid, name)[:, 0] - getattr(cm, name)[:n_u])
        along_v = np.abs(getattr(grid, name)[0, :] - getattr(cp, name)[:n_v])
        if along_u.max() > worst:
            worst = float(along_u.max())
            where = (float(grid.u_grid[int(along_u.argmax())]), 0.0)
        if along_v.max() > worst:
            worst = float(along_v.max())
            where = (0.0, float(grid.v_grid[int(along_v.argmax())]))
    return worst, where


def residual_suite(
    grid: GoursatGrid,
    cp: CharacteristicData,
    cm: CharacteristicData,
    eos: EosModel,
    geometry: Geometry,
    constants: Optional[Mapping[str, float]] = None,
) -> ResidualReport:
    """Sup and RMS residuals over the valid nodes, with ``C * spacing**2`` thresholds."""
    merged = dict(DEFAULT_CONSTANTS)
    merged.update(constants or {})
    report = ResidualReport(du=grid.du, dv=grid.dv)
    spacing = report.spacing
    valid = grid.valid
    for name, values in residual_fields(grid, eos, geometry).items():
        threshold = merged[name] * spacing**ORDER
        report.entries[name] = _summarize(name, values, valid, grid, threshold)

    worst, where = boundary_mismatch(grid, cp, cm)
    report.entries["boundary"] = ResidualEntry(
        name="boundary", sup=worst, l2=worst, location=where, threshold=BOUNDARY_THRESHOLD
    )
    failures = report.failures()
    if failures:
        LOGGER.warning("Residuals above threshold: %s", ", ".join(failures))
    else:
        LOGGER.info("All %d residual families within threshold", len(report.entries))
    return report


def _summarize(
    name: str, values: np.ndarray, valid: np.ndarray, grid: GoursatGrid, threshold: float
) -> ResidualEntry:
    picked = np.abs(np.where(valid, values, 0.0))
    if not valid.any():
        return ResidualEntry(name=name, sup=0.0, l2=0.0, location=(0.0, 0.0), threshold=threshold)
    i, j = np.unravel_index(int(np.argmax(picked)), picked.shape)
    rms = float(np.sqrt(np.mean(np.square(values[valid]))))
    return ResidualEntry(
        name=name,
        sup=float(picked[i, j]),
        l2=rms,
        location=(float(grid.u_grid[i]), float(grid.v_grid[j])),
        threshold=threshold,
    )


__all__ = [
    "DEFAULT_CONSTANTS",
    "BOUNDARY_THRESHOLD",
    "ResidualEntry",
    "ResidualReport",
    "residual_fields",
    "boundary_mismatch",
    "residual_suite",
]
