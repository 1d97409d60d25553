"""Map the characteristic solution into the physical t-r plane."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from charflow.errors import EmptyDomain
from charflow.physics.eos import EosModel
from charflow.physics.state import CharState, from_invariants
from charflow.solver.goursat import GoursatGrid
from charflow.solver.numerics import grad, grad_past_edge, quadrant_closure

LOGGER = logging.getLogger(__name__)

NEWTON_STEPS = 12


@dataclass(slots=True)
class JacobianField:
    det_analytic: np.ndarray
    det_discrete: np.ndarray

    def mismatch(self, valid: Optional[np.ndarray] = None) -> float:
        diff = np.abs(self.det_analytic - self.det_discrete)
        if valid is not None:
            diff = diff[valid]
        return float(np.max(diff)) if diff.size else 0.0


@dataclass(slots=True)
class RasterSpec:
    """Regular t-r raster; ranges default to the extent of the valid nodes."""

    nt: int
    nr: int
    t_range: Optional[Tuple[float, float]] = None
    r_range: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.nt < 2 or self.nr < 2:
            raise ValueError(f"raster needs at least 2x2 points, got {self.nt}x{self.nr}")


@dataclass(slots=True)
class Raster:
    t_axis: np.ndarray
    r_axis: np.ndarray
    rho: np.ndarray
    w: np.ndarray
    p: np.ndarray
    valid: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.t_axis[1] - self.t_axis[0])

    @property
    def dr(self) -> float:
        return float(self.r_axis[1] - self.r_axis[0])


@dataclass(slots=True)
class PhysicalField:
    """Node samples in row-major ``(i, j)`` order; invalid nodes carry NaN primitives."""

    t: np.ndarray
    r: np.ndarray
    rho: np.ndarray
    w: np.ndarray
    p: np.ndarray
    valid: np.ndarray
    shape: Tuple[int, int]
    raster: Optional[Raster] = None

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))

    def node(self, name: str) -> np.ndarray:
        """A sample array reshaped back onto the ``(u, v)`` grid."""
        return np.asarray(getattr(self, name)).reshape(self.shape)


def jacobian_field(grid: GoursatGrid, eos: EosModel) -> JacobianField:
    eta = np.asarray(eos.eta_of_chi_dagger(grid.alpha + grid.beta))
    analytic = 2.0 * grid.mu * grid.nu * eta
    t_u = grad_past_edge(grid.t, grid.du, 0)
    t_v = grad(grid.t, grid.dv, 1)
    r_u = grad_past_edge(grid.r, grid.du, 0)
    r_v = grad(grid.r, grid.dv, 1)
    return JacobianField(det_analytic=analytic, det_discrete=t_u * r_v - t_v * r_u)


def validity_mask(grid: GoursatGrid) -> np.ndarray:
    """Nodes with ``mu, nu > 0`` that no degenerate node precedes in both u and v."""
    bad = (grid.mu <= 0.0) | (grid.nu <= 0.0) | ~np.isfinite(grid.mu) | ~np.isfinite(grid.nu)
    return ~quadrant_closure(bad)


def to_physical(
    grid: GoursatGrid,
    eos: EosModel,
    raster: Optional[RasterSpec] = None,
) -> PhysicalField:
    valid = validity_mask(grid) & grid.valid
    if not valid.any():
        raise EmptyDomain("no grid node has positive mu and nu")
    rho = np.full(grid.shape, np.nan)
    w = np.full(grid.shape, np.nan)
    fluid = from_invariants(CharState(alpha=grid.alpha[valid], beta=grid.beta[valid]), eos)
    rho[valid] = fluid.rho
    w[valid] = fluid.w
    p = np.full(grid.shape, np.nan)
    p[valid] = eos.pressure(rho[valid])

    field = PhysicalField(
        t=grid.t.ravel().copy(),
        r=grid.r.ravel().copy(),
        rho=rho.ravel(),
        w=w.ravel(),
        p=p.ravel(),
        valid=valid.ravel(),
        shape=grid.shape,
    )
    if raster is not None:
        field.raster = resample(grid, valid, eos, raster)
    LOGGER.info("Physical field: %d of %d nodes valid", field.valid_count, valid.size)
    return field


def resample(grid: GoursatGrid, valid: np.ndarray, eos: EosModel, spec: RasterSpec) -> Raster:
    """Bilinear resampling over the image quads whose four corners are valid."""
    t_lo, t_hi = spec.t_range or (float(grid.t[valid].min()), float(grid.t[valid].max()))
    r_lo, r_hi = spec.r_range or (float(grid.r[valid].min()), float(grid.r[valid].max()))
    t_axis = np.linspace(t_lo, t_hi, spec.nt)
    r_axis = np.linspace(r_lo, r_hi, spec.nr)
    alpha = np.full((spec.nt, spec.nr), np.nan)
    beta = np.full((spec.nt, spec.nr), np.nan)
    covered = np.zeros((spec.nt, spec.nr), dtype=bool)

    quad_ok = valid[:-1, :-1] & valid[1:, :-1] & valid[1:, 1:] & valid[:-1, 1:]
    for i, j in np.argwhere(quad_ok):
        corners_t = np.array([grid.t[i, j], grid.t[i + 1, j], grid.t[i + 1, j + 1], grid.t[i, j + 1]])
        corners_r = np.array([grid.r[i, j], grid.r[i + 1, j], grid.r[i + 1, j + 1], grid.r[i, j + 1]])
        k0 = int(np.searchsorted(t_axis, corners_t.min(), side="left"))
        k1 = int(np.searchsorted(t_axis, corners_t.max(), side="right"))
        m0 = int(np.searchsorted(r_axis, corners_r.min(), side="left"))
        m1 = int(np.searchsorted(r_axis, corners_r.max(), side="right"))
        if k1 <= k0 or m1 <= m0:
            continue
        kk, mm = np.meshgrid(np.arange(k0, k1), np.arange(m0, m1), indexing="ij")
        kk, mm = kk.ravel(), mm.ravel()
        fresh = ~covered[kk, mm]
        kk, mm = kk[fresh], mm[fresh]
        if kk.size == 0:
            continue
        pt, pr = t_axis[kk], r_axis[mm]
        inside = winding_number(corners_t, corners_r, pt, pr) != 0
        if not inside.any():
            continue
        kk, mm, pt, pr = kk[inside], mm[inside], pt[inside], pr[inside]
        s, q = invert_bilinear(corners_t, corners_r, pt, pr)
        weights = np.stack([(1 - s) * (1 - q), s * (1 - q), s * q, (1 - s) * q])
        corners_a = np.array([grid.alpha[i, j], grid.alpha[i + 1, j], grid.alpha[i + 1, j + 1], grid.alpha[i, j + 1]])
        corners_b = np.array([grid.beta[i, j], grid.beta[i + 1, j], grid.beta[i + 1, j + 1], grid.beta[i, j + 1]])
        alpha[kk, mm] = corners_a @ weights
        beta[kk, mm] = corners_b @ weights
        covered[kk, mm] = True

    rho = np.full(covered.shape, np.nan)
    w = np.full(covered.shape, np.nan)
    p = np.full(covered.shape, np.nan)
    if covered.any():
        fluid = from_invariants(CharState(alpha=alpha[covered], beta=beta[covered]), eos)
        rho[covered] = fluid.rho
        w[covered] = fluid.w
        p[covered] = eos.pressure(rho[covered])
    LOGGER.debug("Raster %dx%d: %d points covered", spec.nt, spec.nr, int(covered.sum()))
    return Raster(t_axis=t_axis, r_axis=r_axis, rho=rho, w=w, p=p, valid=covered)


def winding_number(xs: np.ndarray, ys: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Winding number of the closed polygon ``(xs, ys)`` around each point.

    Points on an edge count as inside.
    """

    winding = np.zeros(px.shape, dtype=int)
    on_edge = np.zeros(px.shape, dtype=bool)
    count = len(xs)
    for k in range(count):
        x0, y0 = xs[k], ys[k]
        x1, y1 = xs[(k + 1) % count], ys[(k + 1) % count]
        cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        length = float(np.hypot(x1 - x0, y1 - y0))
        scale = 1e-12 * max(length, 1e-300)
        within = (
            (np.minimum(x0, x1) - scale <= px)
            & (px <= np.maximum(x0, x1) + scale)
            & (np.minimum(y0, y1) - scale <= py)
            & (py <= np.maximum(y0, y1) + scale)
        )
        on_edge |= within & (np.abs(cross) <= scale * max(length, 1.0))
        upward = (y0 <= py) & (y1 > py) & (cross > 0)
        downward = (y0 > py) & (y1 <= py) & (cross < 0)
        winding += upward.astype(int) - downward.astype(int)
    winding[on_edge & (winding == 0)] = 1
    return winding


def invert_bilinear(
    xs: np.ndarray, ys: np.ndarray, px: np.ndarray, py: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Local coordinates ``(s, q)`` in ``[0, 1]^2`` of points inside a quad, by Newton."""
    s = np.full(px.shape, 0.5)
    q = np.full(px.shape, 0.5)
    for _ in range(NEWTON_STEPS):
        x = (1 - s) * (1 - q) * xs[0] + s * (1 - q) * xs[1] + s * q * xs[2] + (1 - s) * q * xs[3]
        y = (1 - s) * (1 - q) * ys[0] + s * (1 - q) * ys[1] + s * q * ys[2] + (1 - s) * q * ys[3]
        x_s = (1 - q) * (xs[1] - xs[0]) + q * (xs[2] - xs[3])
        y_s = (1 - q) * (ys[1] - ys[0]) + q * (ys[2] - ys[3])
        x_q = (1 - s) * (xs[3] - xs[0]) + s * (xs[2] - xs[1])
        y_q = (1 - s) * (ys[3] - ys[0]) + s * (ys[2] - ys[1])
        det = x_s * y_q - x_q * y_s
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        rx, ry = px - x, py - y
        s = s + (y_q * rx - x_q * ry) / det
        q = q + (x_s * ry - y_s * rx) / det
    return np.clip(s, 0.0, 1.0), np.clip(q, 0.0, 1.0)


__all__ = [
    "JacobianField",
    "RasterSpec",
    "Raster",
    "PhysicalField",
    "jacobian_field",
    "validity_mask",
    "to_physical",
    "resample",
    "winding_number",
    "invert_bilinear",
]
