"""Constraint ODEs along the two initial characteristics.

Along C+ (parameter ``v``, gauge ``t = v``) the free datum is ``beta+(v)``
and the solver recovers ``alpha`` and ``r``. Along C- (parameter ``u``,
gauge ``t = u``) the free datum is ``alpha-(u)`` and the solver recovers
``beta`` and ``r``. The first-order fields ``(gamma, mu)`` on C+ and
``(delta, nu)`` on C- follow from linear transport equations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from charflow.errors import EpsilonGuardHit, NonPositiveRadius, RangeError
from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.solver.numerics import (
    cubic_sampler,
    cumtrapz,
    rk4_grid,
    sample_derivative,
    uniform_spacing,
)
from charflow.workers.pool import map_ordered

LOGGER = logging.getLogger(__name__)

_CORNER_ATOL = 1e-12


class Side(str, Enum):
    CPLUS = "cplus"
    CMINUS = "cminus"

    @property
    def parameter(self) -> str:
        return "v" if self is Side.CPLUS else "u"


@dataclass(frozen=True, slots=True)
class Corner:
    alpha0: float
    beta0: float
    r0: float
    t0: float = 0.0


@dataclass(slots=True)
class FreeData:
    """Samples of the free invariant on a uniform grid starting at the corner."""

    side: Side
    param_grid: np.ndarray
    samples: np.ndarray
    corner: Corner

    def __post_init__(self) -> None:
        self.param_grid = np.asarray(self.param_grid, dtype=float)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.param_grid.shape != self.samples.shape:
            raise ValueError("free data samples must match the parameter grid")
        if self.param_grid[0] != 0.0:
            raise ValueError("free data parameter grid must start at 0")
        uniform_spacing(self.param_grid)
        if not self.corner.r0 > 0.0:
            raise ValueError(f"corner radius must be positive, got {self.corner.r0}")
        expected = self.corner.beta0 if self.side is Side.CPLUS else self.corner.alpha0
        if abs(self.samples[0] - expected) > _CORNER_ATOL * max(1.0, abs(expected)):
            raise ValueError(
                f"{self.side.value} free data starts at {float(self.samples[0])!r}, corner requires {expected!r}"
            )

    @property
    def spacing(self) -> float:
        return uniform_spacing(self.param_grid)

    def corner_slope(self) -> float:
        """Derivative of the free invariant at the corner."""
        return float(sample_derivative(self.samples, self.spacing)[0])


@dataclass(slots=True)
class CharacteristicData:
    """Solution and first-order fields sampled along one initial characteristic."""

    side: Side
    param: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    t: np.ndarray
    r: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    truncated: bool = False
    u_bar: Optional[float] = None
    u_cross: Optional[float] = None
    r_guard: Optional[float] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.param.size)

    @property
    def spacing(self) -> float:
        return uniform_spacing(self.param)

    def require_complete(self) -> "CharacteristicData":
        if self.truncated:
            raise EpsilonGuardHit(float(self.u_bar or 0.0), float(self.r_guard or 0.0))
        return self

    def head(self, count: int) -> "CharacteristicData":
        """First ``count`` samples as a new record."""
        take = slice(0, count)
        return CharacteristicData(
            side=self.side,
            param=self.param[take].copy(),
            alpha=self.alpha[take].copy(),
            beta=self.beta[take].copy(),
            t=self.t[take].copy(),
            r=self.r[take].copy(),
            mu=self.mu[take].copy(),
            nu=self.nu[take].copy(),
            gamma=self.gamma[take].copy(),
            delta=self.delta[take].copy(),
            truncated=self.truncated,
            u_bar=self.u_bar,
            u_cross=self.u_cross,
            r_guard=self.r_guard,
            diagnostics=dict(self.diagnostics),
        )

    def every(self, step: int) -> "CharacteristicData":
        """Every ``step``-th sample, for data solved on a finer grid than the solver's."""
        if step == 1:
            return self
        trimmed = self.head(self.n)
        for name in ("param", "alpha", "beta", "t", "r", "mu", "nu", "gamma", "delta"):
            setattr(trimmed, name, getattr(self, name)[::step].copy())
        if self.truncated:
            trimmed.u_bar = float(trimmed.param[-1])
        return trimmed

    def columns(self) -> Dict[str, np.ndarray]:
        return {
            self.side.parameter: self.param,
            "alpha": self.alpha,
            "beta": self.beta,
            "t": self.t,
            "r": self.r,
            "mu": self.mu,
            "nu": self.nu,
            "gamma": self.gamma,
            "delta": self.delta,
        }


@dataclass(slots=True)
class TransportCoefficients:
    """Coefficients of the linear first-order transport equations.

    Along C+ with ``nu = 1``::

        gamma_v = a1 gamma + (b1 delta + c1) mu
        mu_v    = a2 gamma + (a2 delta + c2) mu

    Along C- with ``mu = 1``::

        delta_u = a1m delta + (b1m gamma + c1m) nu
        nu_u    = a2 delta + (a2 gamma + c2) nu
    """

    a1: np.ndarray
    b1: np.ndarray
    c1: np.ndarray
    a2: np.ndarray
    c2: np.ndarray
    a1m: np.ndarray
    b1m: np.ndarray
    c1m: np.ndarray


def transport_coefficients(
    alpha: np.ndarray,
    beta: np.ndarray,
    r: np.ndarray,
    geometry: Geometry,
    eos: EosModel,
) -> TransportCoefficients:
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    r = np.asarray(r, dtype=float)
    eta, slope = eos.eta_and_slope(alpha + beta)
    chi = alpha - beta
    a2 = -(0.5 + slope) / (2.0 * eta)
    if not geometry.spherical:
        zero = np.zeros(np.broadcast(alpha, beta, r).shape)
        return TransportCoefficients(zero, zero, zero, a2 + zero, zero, zero, zero, zero)
    b1 = chi * (0.5 + slope) / (2.0 * r)
    return TransportCoefficients(
        a1=(chi * (0.25 - 0.5 * slope) - eta) / r,
        b1=b1,
        c1=eta * chi * (chi - 2.0 * eta) / r**2,
        a2=a2,
        c2=chi * (slope - 0.5) / r,
        a1m=(chi * (0.25 - 0.5 * slope) + eta) / r,
        b1m=b1,
        c1m=eta * chi * (chi + 2.0 * eta) / r**2,
    )


def _source_scalar(alpha: float, beta: float, r: float, geometry: Geometry, eos: EosModel) -> Tuple[float, float]:
    eta = float(eos.eta_of_chi_dagger(alpha + beta))
    if not geometry.spherical:
        return 0.0, eta
    return -eta * (alpha - beta) / r, eta


def solve_cplus(
    data: FreeData,
    eos: EosModel,
    geometry: Geometry,
    *,
    opposite_slope: float = 0.0,
) -> CharacteristicData:
    """Integrate ``(alpha, r)`` along C+ given ``beta+(v)``.

    ``opposite_slope`` is ``d alpha- / du`` at the corner, the initial value
    of ``gamma``.
    """

    if data.side is not Side.CPLUS:
        raise ValueError("solve_cplus needs C+ free data")
    grid = data.param_grid
    beta_of = cubic_sampler(grid, data.samples)

    def rhs(v: float, y: np.ndarray) -> np.ndarray:
        alpha, r = y
        if r <= 0.0:
            raise NonPositiveRadius(f"r={r:.6g} on C+", location=(v,))
        beta = float(beta_of(v))
        source, eta = _source_scalar(alpha, beta, r, geometry, eos)
        return np.array([source, 0.5 * (alpha - beta) + eta])

    corner = data.corner
    try:
        run = rk4_grid(rhs, grid, np.array([corner.alpha0, corner.r0]))
    except RangeError as exc:
        raise exc.at((getattr(exc, "parameter", float("nan")),), labels=("v",)) from exc

    alpha = run.states[:, 0]
    r = run.states[:, 1]
    if np.any(r <= 0.0):
        bad = int(np.argmax(r <= 0.0))
        raise NonPositiveRadius(f"r={r[bad]:.6g} on C+", location=(float(grid[bad]),))

    cd = CharacteristicData(
        side=Side.CPLUS,
        param=grid.copy(),
        alpha=alpha,
        beta=data.samples.copy(),
        t=corner.t0 + grid,
        r=r,
        mu=np.ones_like(grid),
        nu=np.ones_like(grid),
        gamma=np.zeros_like(grid),
        delta=sample_derivative(data.samples, data.spacing),
    )
    derived_first_order(cd, eos, geometry, opposite_slope=opposite_slope)
    cd.diagnostics.update(_cplus_diagnostics(cd, eos, geometry))
    LOGGER.debug(
        "C+ solved n=%d alpha[-1]=%.12g r[-1]=%.12g", cd.n, cd.alpha[-1], cd.r[-1]
    )
    return cd


def solve_cminus(
    data: FreeData,
    eos: EosModel,
    geometry: Geometry,
    eps_guard: float,
    *,
    opposite_slope: float = 0.0,
) -> CharacteristicData:
    """Integrate ``(beta, r)`` along C- given ``alpha-(u)``.

    The march stops at the last grid point where ``r > eps_guard``; the
    result is then flagged ``truncated`` with ``u_bar`` set to that point.
    """

    if data.side is not Side.CMINUS:
        raise ValueError("solve_cminus needs C- free data")
    if not eps_guard > 0.0:
        raise ValueError(f"eps_guard must be positive, got {eps_guard}")
    grid = data.param_grid
    alpha_of = cubic_sampler(grid, data.samples)

    def rhs(u: float, y: np.ndarray) -> np.ndarray:
        beta, r = y
        if r <= 0.0:
            raise NonPositiveRadius(f"r={r:.6g} on C-", location=(u,))
        alpha = float(alpha_of(u))
        source, eta = _source_scalar(alpha, beta, r, geometry, eos)
        return np.array([source, 0.5 * (alpha - beta) - eta])

    corner = data.corner
    rejected: Dict[str, float] = {}

    def guard(u: float, y: np.ndarray) -> bool:
        if y[1] <= eps_guard:
            rejected["r"] = float(y[1])
            return True
        return False

    try:
        run = rk4_grid(
            rhs,
            grid,
            np.array([corner.beta0, corner.r0]),
            stop=guard,
            stop_on=(NonPositiveRadius,),
        )
    except RangeError as exc:
        raise exc.at((getattr(exc, "parameter", float("nan")),), labels=("u",)) from exc

    count = run.accepted
    param = grid[:count].copy()
    alpha = data.samples[:count].copy()
    cd = CharacteristicData(
        side=Side.CMINUS,
        param=param,
        alpha=alpha,
        beta=run.states[:, 0],
        t=corner.t0 + param,
        r=run.states[:, 1],
        mu=np.ones_like(param),
        nu=np.ones_like(param),
        gamma=sample_derivative(data.samples, data.spacing)[:count],
        delta=np.zeros_like(param),
        r_guard=float(eps_guard),
    )
    if run.stopped:
        cd.truncated = True
        cd.u_bar = float(param[-1])
        cd.u_cross = _guard_crossing(param, cd.r, rejected.get("r"), data.spacing, eps_guard)
        LOGGER.warning(
            "C- truncated at u=%.6g (r=%.6g, guard %.3g)", cd.u_bar, cd.r[-1], eps_guard
        )
    if count >= 2:
        derived_first_order(cd, eos, geometry, opposite_slope=opposite_slope)
    else:
        cd.delta[:] = opposite_slope
    return cd


def _guard_crossing(
    param: np.ndarray,
    r: np.ndarray,
    rejected_r: Optional[float],
    spacing: float,
    eps_guard: float,
) -> Optional[float]:
    if rejected_r is None:
        return None
    last = float(r[-1])
    if last == rejected_r:
        return float(param[-1])
    return float(param[-1] + spacing * (last - eps_guard) / (last - rejected_r))


def derived_first_order(
    cd: CharacteristicData,
    eos: EosModel,
    geometry: Geometry,
    *,
    opposite_slope: float = 0.0,
) -> CharacteristicData:
    """Fill ``(gamma, mu)`` on C+ or ``(delta, nu)`` on C- in place."""

    grid = cd.param
    if grid.size < 2:
        return cd
    half = np.empty(2 * grid.size - 1)
    half[0::2] = grid
    half[1::2] = 0.5 * (grid[:-1] + grid[1:])

    def on_half(values: np.ndarray) -> np.ndarray:
        return cubic_sampler(grid, values)(half) if grid.size > 2 else np.interp(half, grid, values)

    coeffs = transport_coefficients(on_half(cd.alpha), on_half(cd.beta), on_half(cd.r), geometry, eos)
    if cd.side is Side.CPLUS:
        known = on_half(cd.delta)
        matrices = np.empty((half.size, 2, 2))
        matrices[:, 0, 0] = coeffs.a1
        matrices[:, 0, 1] = coeffs.b1 * known + coeffs.c1
        matrices[:, 1, 0] = coeffs.a2
        matrices[:, 1, 1] = coeffs.a2 * known + coeffs.c2
    else:
        known = on_half(cd.gamma)
        matrices = np.empty((half.size, 2, 2))
        matrices[:, 0, 0] = coeffs.a1m
        matrices[:, 0, 1] = coeffs.b1m * known + coeffs.c1m
        matrices[:, 1, 0] = coeffs.a2
        matrices[:, 1, 1] = coeffs.a2 * known + coeffs.c2

    spacing = cd.spacing
    origin = float(grid[0])

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        index = int(round(2.0 * (x - origin) / spacing))
        return matrices[index] @ y

    run = rk4_grid(rhs, grid, np.array([opposite_slope, 1.0]))
    if cd.side is Side.CPLUS:
        cd.gamma = run.states[:, 0]
        cd.mu = run.states[:, 1]
    else:
        cd.delta = run.states[:, 0]
        cd.nu = run.states[:, 1]
    return cd


def solve_pair(
    plus: FreeData,
    minus: FreeData,
    eos: EosModel,
    geometry: Geometry,
    eps_guard: float,
    *,
    threads: int = 1,
) -> Tuple[CharacteristicData, CharacteristicData]:
    """Solve both constraint problems, each seeded with the other's corner slope."""

    alpha_slope = minus.corner_slope()
    beta_slope = plus.corner_slope()
    jobs = [
        lambda: solve_cplus(plus, eos, geometry, opposite_slope=alpha_slope),
        lambda: solve_cminus(minus, eos, geometry, eps_guard, opposite_slope=beta_slope),
    ]
    cp, cm = map_ordered(lambda job: job(), jobs, threads)
    ok, report = corner_compatibility(cp, cm, eos=eos, geometry=geometry)
    if not ok:
        LOGGER.warning("Corner mismatch between C+ and C-: %s", report)
    return cp, cm


def corner_compatibility(
    cp: CharacteristicData,
    cm: CharacteristicData,
    *,
    eos: Optional[EosModel] = None,
    geometry: Optional[Geometry] = None,
    atol: float = _CORNER_ATOL,
) -> Tuple[bool, Dict[str, float]]:
    """Compare zeroth- and first-order corner values reached from either side.

    ``gamma`` pits the seed carried on C+ against the slope of ``alpha`` sampled
    on the C- record, and ``delta`` the C- seed against the slope of ``beta`` on
    the C+ record. With ``eos`` and ``geometry`` the slope of the integrated
    invariant on each side is also checked against the source evaluated at the
    opposite side's corner state (``alpha_v`` and ``beta_u``). First-order
    entries are allowed the truncation error of the sampled slopes.
    """
    report = {
        name: abs(float(getattr(cp, name)[0]) - float(getattr(cm, name)[0]))
        for name in ("alpha", "beta", "t", "r", "mu", "nu")
    }
    slope_u = _corner_slope(cm.alpha, cm)
    slope_v = _corner_slope(cp.beta, cp)
    first = {
        "gamma": abs(float(cp.gamma[0]) - slope_u),
        "delta": abs(float(cm.delta[0]) - slope_v),
    }
    if eos is not None and geometry is not None:
        source_m, _ = _source_scalar(float(cm.alpha[0]), float(cm.beta[0]), float(cm.r[0]), geometry, eos)
        source_p, _ = _source_scalar(float(cp.alpha[0]), float(cp.beta[0]), float(cp.r[0]), geometry, eos)
        first["alpha_v"] = abs(_corner_slope(cp.alpha, cp) - source_m)
        first["beta_u"] = abs(_corner_slope(cm.beta, cm) - source_p)
    report.update(first)

    scale = max(1.0, abs(float(cp.r[0])), abs(float(cp.alpha[0])), abs(float(cp.beta[0])))
    spacing = max(_record_spacing(cp), _record_spacing(cm))
    ok = all(report[name] <= atol * scale for name in ("alpha", "beta", "t", "r", "mu", "nu"))
    ok = ok and all(value <= (atol + spacing**3) * scale for value in first.values())
    return ok, report


def _record_spacing(cd: CharacteristicData) -> float:
    return cd.spacing if cd.n >= 2 else 0.0


def _corner_slope(values: np.ndarray, cd: CharacteristicData) -> float:
    if cd.n < 2:
        return 0.0
    return float(sample_derivative(values, cd.spacing)[0])


def chi_bound_profile(cd: CharacteristicData) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(bound, attained)`` for ``|alpha - beta|`` along C+.

    The bound is ``|chi(0)| + int_0^v |d beta+ / dv|``.
    """
    chi = cd.alpha - cd.beta
    bound = abs(chi[0]) + cumtrapz(np.abs(cd.delta), cd.spacing)
    return bound, np.abs(chi)


def chi_representation(cd: CharacteristicData, eos: EosModel, geometry: Geometry) -> np.ndarray:
    """``chi`` rebuilt from its integrating-factor representation along C+."""
    chi0 = float(cd.alpha[0] - cd.beta[0])
    if geometry.spherical:
        eta = np.asarray(eos.eta_of_chi_dagger(cd.alpha + cd.beta))
        damping = cumtrapz(eta / cd.r, cd.spacing)
    else:
        damping = np.zeros_like(cd.param)
    forcing = cumtrapz(np.exp(damping) * cd.delta, cd.spacing)
    return np.exp(-damping) * (chi0 - forcing)


def _cplus_diagnostics(cd: CharacteristicData, eos: EosModel, geometry: Geometry) -> Dict[str, float]:
    bound, attained = chi_bound_profile(cd)
    rebuilt = chi_representation(cd, eos, geometry)
    margin = float(np.min(bound - attained))
    scale = max(1.0, float(np.max(np.abs(cd.beta))))
    tolerance = 10.0 * cd.spacing**2 * scale
    if margin < -tolerance:
        LOGGER.warning("chi bound violated on C+: margin %.3e (tolerance %.3e)", margin, tolerance)
    return {
        "chi_bound_margin": margin,
        "chi_bound_tolerance": tolerance,
        "chi_representation_error": float(np.max(np.abs(rebuilt - (cd.alpha - cd.beta)))),
    }


__all__ = [
    "Side",
    "Corner",
    "FreeData",
    "CharacteristicData",
    "TransportCoefficients",
    "transport_coefficients",
    "solve_cplus",
    "solve_cminus",
    "derived_first_order",
    "solve_pair",
    "corner_compatibility",
    "chi_bound_profile",
    "chi_representation",
]
