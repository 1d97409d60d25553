"""Picard iteration for the characteristic initial value problem on a rectangle.

The unknowns live on a uniform ``(u, v)`` grid indexed ``[i, j]``. Row
``j = 0`` carries the C- data and column ``i = 0`` the C+ data; both are
pinned throughout. One outer iteration:

1. differentiate the current ``alpha, beta`` to build ``K`` and ``L``, with
   no u-stencil reaching back to the pinned column and no v-stencil to the
   pinned row;
2. solve the coupled integral equations for ``mu`` (per u-row) and ``nu``
   (per v-column) with exponential integrating factors;
3. integrate ``t`` and ``r`` along v from the lower row;
4. update ``alpha`` along v and ``beta`` along u with the geometric source.

All quadratures are composite trapezoid, so the scheme is second order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from charflow.errors import CharflowError, NoConvergence, NonPositiveRadius, RangeError
from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.solver.constraints import CharacteristicData
from charflow.solver.estimate import StripWidthEstimate
from charflow.solver.numerics import cumtrapz, grad, grad_past_edge, quadrant_closure, relative_change
from charflow.workers.pool import map_chunks

LOGGER = logging.getLogger(__name__)

FIELDS = ("alpha", "beta", "t", "r", "mu", "nu", "gamma", "delta")
TRACED = ("alpha", "beta", "alpha_u", "beta_v", "mu", "nu")


@dataclass(slots=True)
class GridSpec:
    """``nu`` x ``nv`` cells over ``[0, h] x [0, v_star]``."""

    nu: int
    nv: int
    h: float
    v_star: float

    def __post_init__(self) -> None:
        if self.nu < 2 or self.nv < 2:
            raise ValueError(f"grid needs at least 2 cells per direction, got {self.nu}x{self.nv}")
        if not (self.h > 0.0 and self.v_star > 0.0):
            raise ValueError("strip depth h and v_star must be positive")

    @property
    def du(self) -> float:
        return self.h / self.nu

    @property
    def dv(self) -> float:
        return self.v_star / self.nv

    def u_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.h, self.nu + 1)

    def v_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.v_star, self.nv + 1)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(nu=self.nu * factor, nv=self.nv * factor, h=self.h, v_star=self.v_star)

    def label(self) -> str:
        return f"{self.nu}x{self.nv}"


@dataclass(slots=True)
class PicardSettings:
    tol: float = 1e-10
    max_iter: int = 60
    inner_tol: Optional[float] = None
    inner_max_iter: int = 80
    threads: int = 1

    @property
    def effective_inner_tol(self) -> float:
        return self.inner_tol if self.inner_tol is not None else 0.1 * self.tol


@dataclass(slots=True)
class BoundaryData:
    """Lower-row values (functions of u) and left-column values (functions of v)."""

    u_grid: np.ndarray
    v_grid: np.ndarray
    row: Dict[str, np.ndarray]
    col: Dict[str, np.ndarray]


@dataclass(slots=True)
class GoursatGrid:
    u_grid: np.ndarray
    v_grid: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    t: np.ndarray
    r: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    r_alt: np.ndarray
    valid: np.ndarray

    @property
    def du(self) -> float:
        return float(self.u_grid[1] - self.u_grid[0])

    @property
    def dv(self) -> float:
        return float(self.v_grid[1] - self.v_grid[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.alpha.shape  # type: ignore[return-value]

    def field(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def last_row(self) -> Dict[str, np.ndarray]:
        """Fields on the top line ``v = v_grid[-1]`` as functions of u."""
        return {name: getattr(self, name)[:, -1].copy() for name in FIELDS}


@dataclass(slots=True)
class IterationTrace:
    norms: Dict[str, List[float]] = field(default_factory=lambda: {name: [] for name in TRACED})
    combined: List[float] = field(default_factory=list)
    inner_iterations: List[int] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    segment: Optional[int] = None
    v_range: Tuple[float, float] = (0.0, 0.0)
    bootstrap: List[Dict[str, object]] = field(default_factory=list)

    def record(self, norms: Dict[str, float], inner: int) -> float:
        for name in TRACED:
            self.norms[name].append(float(norms[name]))
        worst = max(norms["alpha"], norms["beta"], norms["mu"], norms["nu"])
        self.combined.append(float(worst))
        self.inner_iterations.append(int(inner))
        self.iterations = len(self.combined)
        return worst

    def last_norms(self) -> Dict[str, float]:
        return {name: values[-1] for name, values in self.norms.items() if values}

    def as_dict(self) -> Dict[str, object]:
        return {
            "segment": self.segment,
            "v_range": list(self.v_range),
            "iterations": self.iterations,
            "converged": self.converged,
            "combined": list(self.combined),
            "norms": {name: list(values) for name, values in self.norms.items()},
            "inner_iterations": list(self.inner_iterations),
            "bootstrap": list(self.bootstrap),
        }


def boundary_from_characteristics(
    cp: CharacteristicData, cm: CharacteristicData, spec: GridSpec
) -> BoundaryData:
    """Slice the constraint data onto the solver grid."""
    _check_alignment(cp, spec.nv, spec.dv, "C+", "v")
    _check_alignment(cm, spec.nu, spec.du, "C-", "u")
    col = {name: np.array(getattr(cp, name)[: spec.nv + 1], dtype=float) for name in FIELDS}
    row = {name: np.array(getattr(cm, name)[: spec.nu + 1], dtype=float) for name in FIELDS}
    return BoundaryData(u_grid=spec.u_grid(), v_grid=spec.v_grid(), row=row, col=col)


def _check_alignment(cd: CharacteristicData, cells: int, spacing: float, label: str, param: str) -> None:
    if cd.n < cells + 1:
        end = float(cd.param[-1])
        raise ValueError(
            f"{label} data end at {param}={end:.6g}, short of the {cells} cells the grid needs"
            + (" (data truncated by the radius guard)" if cd.truncated else "")
        )
    if abs(cd.spacing - spacing) > 1e-9 * spacing:
        raise ValueError(f"{label} sample spacing {cd.spacing:.6g} differs from grid spacing {spacing:.6g}")


def picard_corner(
    cp: CharacteristicData,
    cm: CharacteristicData,
    spec: GridSpec,
    eos: EosModel,
    geometry: Geometry,
    settings: Optional[PicardSettings] = None,
) -> Tuple[GoursatGrid, IterationTrace]:
    """Solve on ``[0, h] x [0, v_star]`` in a single Picard sweep."""
    boundary = boundary_from_characteristics(cp, cm, spec)
    return solve_boundary(boundary, eos, geometry, settings or PicardSettings())


def solve_boundary(
    boundary: BoundaryData,
    eos: EosModel,
    geometry: Geometry,
    settings: PicardSettings,
    *,
    segment: Optional[int] = None,
) -> Tuple[GoursatGrid, IterationTrace]:
    u, v = boundary.u_grid, boundary.v_grid
    du = float(u[1] - u[0])
    dv = float(v[1] - v[0])
    row, col = boundary.row, boundary.col
    shape = (u.size, v.size)

    alpha = np.broadcast_to(row["alpha"][:, None], shape).copy()
    alpha[0, :] = col["alpha"]
    beta = np.broadcast_to(col["beta"][None, :], shape).copy()
    beta[:, 0] = row["beta"]
    mu = np.broadcast_to(row["mu"][:, None], shape).copy()
    mu[0, :] = col["mu"]
    nu = np.broadcast_to(col["nu"][None, :], shape).copy()
    nu[:, 0] = row["nu"]

    trace = IterationTrace(segment=segment, v_range=(float(v[0]), float(v[-1])))
    context = _Context(boundary, du, dv, eos, geometry, settings)

    for iteration in range(1, settings.max_iter + 1):
        closure = context.closure(alpha, beta, mu, nu)
        new_alpha = row["alpha"][:, None] + cumtrapz(closure.nu * closure.F, dv, axis=1)
        new_alpha[0, :] = col["alpha"]
        new_beta = col["beta"][None, :] + cumtrapz(closure.mu * closure.F, du, axis=0)
        new_beta[:, 0] = row["beta"]

        norms = {
            "alpha": relative_change(new_alpha, alpha),
            "beta": relative_change(new_beta, beta),
            "alpha_u": relative_change(context.alpha_u(new_alpha), context.alpha_u(alpha)),
            "beta_v": relative_change(context.beta_v(new_beta), context.beta_v(beta)),
            "mu": relative_change(closure.mu, mu),
            "nu": relative_change(closure.nu, nu),
        }
        worst = trace.record(norms, closure.inner)
        LOGGER.debug(
            "Picard iteration %d norm=%.3e (alpha %.2e beta %.2e mu %.2e nu %.2e) inner=%d",
            iteration,
            worst,
            norms["alpha"],
            norms["beta"],
            norms["mu"],
            norms["nu"],
            closure.inner,
        )
        alpha, beta, mu, nu = new_alpha, new_beta, closure.mu, closure.nu
        if worst < settings.tol:
            trace.converged = True
            break

    final = context.closure(alpha, beta, mu, nu)
    grid = context.assemble(alpha, beta, final)
    if not trace.converged:
        raise NoConvergence(settings.max_iter, trace.last_norms(), trace=trace, grid=grid)
    LOGGER.info(
        "Picard converged in %d iterations on %dx%d nodes (v in [%.4g, %.4g])",
        trace.iterations,
        u.size,
        v.size,
        v[0],
        v[-1],
    )
    return grid, trace


@dataclass(slots=True)
class _Closure:
    mu: np.ndarray
    nu: np.ndarray
    t: np.ndarray
    r: np.ndarray
    F: np.ndarray
    eta: np.ndarray
    inner: int


class _Context:
    """Per-solve constants shared by the iteration steps."""

    def __init__(
        self,
        boundary: BoundaryData,
        du: float,
        dv: float,
        eos: EosModel,
        geometry: Geometry,
        settings: PicardSettings,
    ) -> None:
        self.boundary = boundary
        self.du = du
        self.dv = dv
        self.eos = eos
        self.geometry = geometry
        self.settings = settings

    def alpha_u(self, alpha: np.ndarray) -> np.ndarray:
        out = grad_past_edge(alpha, self.du, 0)
        out[:, 0] = self.boundary.row["gamma"]
        out[0, :] = self.boundary.col["gamma"]
        return out

    def beta_v(self, beta: np.ndarray) -> np.ndarray:
        out = grad_past_edge(beta, self.dv, 1)
        out[0, :] = self.boundary.col["delta"]
        out[:, 0] = self.boundary.row["delta"]
        return out

    def eta_fields(self, alpha: np.ndarray, beta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        chi_dagger = alpha + beta
        try:
            eta, slope = self.eos.eta_and_slope(chi_dagger)
        except RangeError as exc:
            raise exc.at(self._locate(chi_dagger == exc.chi_dagger)) from exc
        return np.asarray(eta), np.asarray(slope)

    def _locate(self, mask: np.ndarray) -> Tuple[float, float]:
        hits = np.argwhere(mask)
        i, j = (int(x) for x in hits[0]) if hits.size else (0, 0)
        return float(self.boundary.u_grid[i]), float(self.boundary.v_grid[j])

    def closure(self, alpha: np.ndarray, beta: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> _Closure:
        """``mu, nu, t, r, F`` consistent with the given invariants."""
        row, col = self.boundary.row, self.boundary.col
        eta, slope = self.eta_fields(alpha, beta)
        two_eta = 2.0 * eta
        alpha_u = self.alpha_u(alpha)
        beta_v = self.beta_v(beta)
        beta_u = grad(beta, self.du, 0)
        alpha_v = grad(alpha, self.dv, 1)
        K = ((0.5 + slope) * alpha_u + (slope - 0.5) * beta_u) / two_eta
        L = ((0.5 - slope) * alpha_v - (0.5 + slope) * beta_v) / two_eta

        mu, nu, inner = self.solve_mu_nu(K, L, mu, nu)

        chi = alpha - beta
        cplus = 0.5 * chi + eta
        t = row["t"][:, None] + cumtrapz(nu, self.dv, axis=1)
        t[0, :] = col["t"]
        r = row["r"][:, None] + cumtrapz(nu * cplus, self.dv, axis=1)
        r[0, :] = col["r"]
        if np.any(r <= 0.0):
            location = self._locate(r <= 0.0)
            raise NonPositiveRadius(
                f"radius reached {float(np.min(r)):.6g} inside the strip", location=location
            )
        if self.geometry.spherical:
            F = -eta * chi / r
        else:
            F = np.zeros_like(r)
        return _Closure(mu=mu, nu=nu, t=t, r=r, F=F, eta=eta, inner=inner)

    def solve_mu_nu(
        self, K: np.ndarray, L: np.ndarray, mu: np.ndarray, nu: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, int]:
        """Fixed point of the coupled integral equations for ``mu`` and ``nu``.

        ``mu`` integrates along v on each u-row and ``nu`` along u on each
        v-column; rows and columns are independent and may be split across
        worker threads.
        """
        row, col = self.boundary.row, self.boundary.col
        threads = self.settings.threads
        du, dv = self.du, self.dv
        growth_v = cumtrapz(L, dv, axis=1)
        growth_u = cumtrapz(K, du, axis=0)
        rise_v, fall_v = np.exp(growth_v), np.exp(-growth_v)
        rise_u, fall_u = np.exp(growth_u), np.exp(-growth_u)
        mu_row = row["mu"][:, None]
        nu_col = col["nu"][None, :]

        inner = 0
        for inner in range(1, self.settings.inner_max_iter + 1):

            def mu_rows(span: slice, nu=nu) -> np.ndarray:
                forcing = cumtrapz(fall_v[span] * K[span] * nu[span], dv, axis=1)
                return rise_v[span] * (mu_row[span] - forcing)

            new_mu = map_chunks(mu_rows, K.shape[0], axis=0, threads=threads)
            new_mu[0, :] = col["mu"]

            def nu_cols(span: slice, mu=new_mu) -> np.ndarray:
                forcing = cumtrapz(rise_u[:, span] * L[:, span] * mu[:, span], du, axis=0)
                return fall_u[:, span] * (nu_col[:, span] + forcing)

            new_nu = map_chunks(nu_cols, K.shape[1], axis=1, threads=threads)
            new_nu[:, 0] = row["nu"]

            change = max(relative_change(new_mu, mu), relative_change(new_nu, nu))
            mu, nu = new_mu, new_nu
            if change < self.settings.effective_inner_tol:
                break
        return mu, nu, inner

    def assemble(self, alpha: np.ndarray, beta: np.ndarray, final: _Closure) -> GoursatGrid:
        col = self.boundary.col
        chi = alpha - beta
        cminus = 0.5 * chi - final.eta
        r_alt = col["r"][None, :] + cumtrapz(final.mu * cminus, self.du, axis=0)
        bad = (final.mu <= 0.0) | (final.nu <= 0.0) | ~np.isfinite(final.mu) | ~np.isfinite(final.nu)
        return GoursatGrid(
            u_grid=self.boundary.u_grid.copy(),
            v_grid=self.boundary.v_grid.copy(),
            alpha=alpha,
            beta=beta,
            t=final.t,
            r=final.r,
            mu=final.mu,
            nu=final.nu,
            gamma=self.alpha_u(alpha),
            delta=self.beta_v(beta),
            r_alt=r_alt,
            valid=~quadrant_closure(bad),
        )


def segment_edges(nv: int, segments: int) -> List[Tuple[int, int]]:
    """Inclusive ``(first, last)`` v-indices of each strip segment; neighbours share a line."""
    segments = max(1, min(int(segments), nv))
    edges = np.unique(np.linspace(0, nv, segments + 1).round().astype(int))
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def extend_strip(
    cp: CharacteristicData,
    cm: CharacteristicData,
    spec: GridSpec,
    eos: EosModel,
    geometry: Geometry,
    segments: int = 1,
    settings: Optional[PicardSettings] = None,
    *,
    estimate: Optional[StripWidthEstimate] = None,
) -> Tuple[GoursatGrid, List[IterationTrace]]:
    """Solve over ``[0, h] x [0, v_star]`` as a stack of corner problems in v.

    Each segment after the first takes its lower-row data from the top row of
    the previous one. When ``estimate`` is given the bootstrap inequalities
    are evaluated per segment and recorded on its trace.
    """

    if segments < 1:
        raise ValueError(f"segments must be >= 1, got {segments}")
    settings = settings or PicardSettings()
    full = boundary_from_characteristics(cp, cm, spec)
    shape = (full.u_grid.size, full.v_grid.size)
    stacked = {name: np.empty(shape) for name in (*FIELDS, "r_alt")}
    valid = np.ones(shape, dtype=bool)
    traces: List[IterationTrace] = []

    row = full.row
    for index, (first, last) in enumerate(segment_edges(spec.nv, segments)):
        take = slice(first, last + 1)
        boundary = BoundaryData(
            u_grid=full.u_grid,
            v_grid=full.v_grid[take],
            row=row,
            col={name: values[take] for name, values in full.col.items()},
        )
        try:
            sub, trace = solve_boundary(boundary, eos, geometry, settings, segment=index)
        except CharflowError as exc:
            exc.tag_segment(index)
            raise
        if estimate is not None:
            trace.bootstrap = bootstrap_report(sub, estimate)
            for entry in trace.bootstrap:
                if not entry["relaxed_ok"]:
                    LOGGER.warning(
                        "Segment %d bootstrap bound %s: attained %.4g vs bound %.4g",
                        index,
                        entry["quantity"],
                        entry["attained"],
                        entry["bound"],
                    )
        for name in stacked:
            stacked[name][:, take] = getattr(sub, name)
        valid[:, take] &= sub.valid
        traces.append(trace)
        row = sub.last_row()
        LOGGER.info("Strip segment %d done (v in [%.4g, %.4g])", index, *trace.v_range)

    grid = GoursatGrid(
        u_grid=full.u_grid.copy(),
        v_grid=full.v_grid.copy(),
        valid=~quadrant_closure(~valid),
        **stacked,
    )
    return grid, traces


def bootstrap_report(grid: GoursatGrid, estimate: StripWidthEstimate) -> List[Dict[str, object]]:
    """Evaluate the bootstrap bounds on ``grid``.

    ``relaxed_ok`` is the non-strict form and ``strict_ok`` the strict one.
    """

    checks = [
        ("nu", float(np.max(np.abs(grid.nu))), estimate.l, "upper"),
        ("alpha", float(np.max(np.abs(grid.alpha))), estimate.A, "upper"),
        ("beta", float(np.max(np.abs(grid.beta))), estimate.B, "upper"),
        ("delta", float(np.max(np.abs(grid.delta))), estimate.D, "upper"),
        ("r_min", float(np.min(grid.r)), 0.5 * estimate.r_m, "lower"),
        ("r_max", float(np.max(grid.r)), 1.5 * estimate.r_M, "upper"),
    ]
    report: List[Dict[str, object]] = []
    for quantity, attained, bound, sense in checks:
        slack = 1e-12 * max(1.0, abs(bound))
        if sense == "upper":
            relaxed = attained <= bound + slack
            strict = attained < bound
        else:
            relaxed = attained >= bound - slack
            strict = attained > bound
        report.append(
            {
                "quantity": quantity,
                "attained": attained,
                "bound": bound,
                "relaxed_ok": bool(relaxed),
                "strict_ok": bool(strict),
            }
        )
    return report


__all__ = [
    "FIELDS",
    "GridSpec",
    "PicardSettings",
    "BoundaryData",
    "GoursatGrid",
    "IterationTrace",
    "boundary_from_characteristics",
    "picard_corner",
    "solve_boundary",
    "segment_edges",
    "extend_strip",
    "bootstrap_report",
]
