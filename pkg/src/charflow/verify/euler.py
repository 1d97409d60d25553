"""Residuals of the barotropic Euler equations in the t-r plane.

Mass:      rho_t + (rho w)_r + 2 rho w / r = 0   (last term spherical only)
Momentum:  w_t + w w_r + (eta^2 / rho) rho_r = 0
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.ndimage import binary_erosion

from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.solver.goursat import GoursatGrid
from charflow.solver.hodograph import PhysicalField, Raster
from charflow.solver.numerics import grad, grad_past_edge

LOGGER = logging.getLogger(__name__)


@dataclass(slots=True)
class EulerReport:
    node_mass: float
    node_momentum: float
    node_count: int
    raster_mass: Optional[float] = None
    raster_momentum: Optional[float] = None
    raster_cells: int = 0

    @property
    def node_sup(self) -> float:
        return max(self.node_mass, self.node_momentum)

    @property
    def raster_sup(self) -> Optional[float]:
        if self.raster_mass is None or self.raster_momentum is None:
            return None
        return max(self.raster_mass, self.raster_momentum)

    def as_dict(self) -> Dict[str, object]:
        return {
            "node_mass": self.node_mass,
            "node_momentum": self.node_momentum,
            "node_count": self.node_count,
            "raster_mass": self.raster_mass,
            "raster_momentum": self.raster_momentum,
            "raster_cells": self.raster_cells,
        }


def _residuals(
    rho: np.ndarray,
    w: np.ndarray,
    r: np.ndarray,
    rho_t: np.ndarray,
    rho_r: np.ndarray,
    w_t: np.ndarray,
    w_r: np.ndarray,
    eos: EosModel,
    geometry: Geometry,
) -> Tuple[np.ndarray, np.ndarray]:
    mass = rho_t + rho * w_r + w * rho_r
    if geometry.spherical:
        mass = mass + 2.0 * rho * w / r
    eta = np.asarray(eos.eta_of_rho(rho))
    momentum = w_t + w * w_r + eta**2 / rho * rho_r
    return mass, momentum


def node_residuals(
    grid: GoursatGrid, physical: PhysicalField, eos: EosModel, geometry: Geometry
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residual arrays on the characteristic grid, via the inverse hodograph Jacobian.

    Returns ``(mass, momentum, mask)``; the mask keeps nodes whose u and v
    neighbours are valid.
    """

    rho = physical.node("rho")
    w = physical.node("w")
    valid = physical.node("valid").astype(bool)
    du, dv = grid.du, grid.dv
    t_u, t_v = grad_past_edge(grid.t, du, 0), grad(grid.t, dv, 1)
    r_u, r_v = grad_past_edge(grid.r, du, 0), grad(grid.r, dv, 1)
    jac = t_u * r_v - t_v * r_u

    def chain(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        f_u, f_v = grad_past_edge(values, du, 0), grad_past_edge(values, dv, 1)
        return (f_u * r_v - r_u * f_v) / jac, (t_u * f_v - t_v * f_u) / jac

    with np.errstate(invalid="ignore", divide="ignore"):
        rho_t, rho_r = chain(rho)
        w_t, w_r = chain(w)
        safe_rho = np.where(valid, rho, 1.0)
        mass, momentum = _residuals(safe_rho, np.where(valid, w, 0.0), grid.r, rho_t, rho_r, w_t, w_r, eos, geometry)
    mask = binary_erosion(valid, structure=np.ones((3, 3), dtype=bool), border_value=1)
    mask &= np.isfinite(mass) & np.isfinite(momentum)
    return mass, momentum, mask


def raster_residuals(raster: Raster, eos: EosModel, geometry: Geometry) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residual arrays on the t-r raster, skipping cells next to uncovered ones."""
    valid = raster.valid
    rho = np.where(valid, raster.rho, 1.0)
    w = np.where(valid, raster.w, 0.0)
    dt, dr = raster.dt, raster.dr
    rho_t, rho_r = grad(rho, dt, 0), grad(rho, dr, 1)
    w_t, w_r = grad(w, dt, 0), grad(w, dr, 1)
    r = np.broadcast_to(raster.r_axis[None, :], rho.shape)
    mass, momentum = _residuals(rho, w, r, rho_t, rho_r, w_t, w_r, eos, geometry)
    mask = binary_erosion(valid, structure=np.ones((3, 3), dtype=bool), border_value=1)
    return mass, momentum, mask


def _sup(values: np.ndarray, mask: np.ndarray) -> float:
    picked = np.abs(values[mask])
    return float(picked.max()) if picked.size else 0.0


def euler_residuals(
    grid: GoursatGrid, physical: PhysicalField, eos: EosModel, geometry: Geometry
) -> EulerReport:
    mass, momentum, mask = node_residuals(grid, physical, eos, geometry)
    report = EulerReport(
        node_mass=_sup(mass, mask),
        node_momentum=_sup(momentum, mask),
        node_count=int(mask.sum()),
    )
    if physical.raster is not None:
        r_mass, r_momentum, r_mask = raster_residuals(physical.raster, eos, geometry)
        report.raster_mass = _sup(r_mass, r_mask)
        report.raster_momentum = _sup(r_momentum, r_mask)
        report.raster_cells = int(r_mask.sum())
    LOGGER.info(
        "Euler residuals: nodes %.3e over %d nodes, raster %s",
        report.node_sup,
        report.node_count,
        "n/a" if report.raster_sup is None else f"{report.raster_sup:.3e} over {report.raster_cells} cells",
    )
    return report


__all__ = ["EulerReport", "node_residuals", "raster_residuals", "euler_residuals"]
