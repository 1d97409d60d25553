"""Recommended strip widths from the smallness conditions of the existence argument.

Suprema of state functions are taken over a bootstrap box around the data:
the ``(alpha, beta)`` ranges attained on both characteristics, widened by how
far the source can move each invariant across the rectangle and clipped to
``|alpha| <= A, |beta| <= B``. Radii span ``[r_m / 2, 3 r_M / 2]``. Data that
do not vary leave every variation-driven bound unconstraining.
The resulting widths are sufficient, not necessary: the solver runs on the
widths it is given and only reports how they compare.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from charflow.errors import InvalidL, RangeError
from charflow.physics.eos import EosModel
from charflow.physics.state import CharState, Geometry, source_partials
from charflow.solver.constraints import CharacteristicData, transport_coefficients
from charflow.solver.numerics import cumtrapz

LOGGER = logging.getLogger(__name__)

BOX_ALPHA_BETA_NODES = 64
BOX_RADIUS_NODES = 16
SCAN_NODES = 1025
_FLOOR_FRACTION = 2.0**-20
_MAX_HALVINGS = 60
_BOX_PASSES = 16
_NEGLIGIBLE = 1e-12

Range = Tuple[float, float]


@dataclass(slots=True)
class BoxSuprema:
    """Suprema of state functions over the sampled box."""

    F_bar: float
    F_alpha: float
    F_beta: float
    F_r: float
    C_plus_alpha: float
    C_plus_beta: float
    C_minus_alpha: float
    C_minus_beta: float
    C_pm: float
    c_plus_dagger: float
    c_minus_dagger: float
    c_plus_drop: float
    c_plus_rise: float
    c_minus_drop: float
    c_minus_rise: float
    Q1: float
    Q2: float
    S1: float
    S2: float
    alpha_low: float
    alpha_high: float
    beta_low: float
    beta_high: float
    states: int


@dataclass(slots=True)
class StripWidthEstimate:
    l: float
    a0: float
    b0: float
    d0: float
    r_m: float
    r_M: float
    g0: float
    m0: float
    G: float
    M: float
    K_bar: float
    L_bar: float
    H1: float
    H2: float
    h_data: float
    h_rec: float
    eps_rec: float
    u_star: float
    v_star: float
    box: BoxSuprema
    h_bounds: Dict[str, float] = field(default_factory=dict)
    eps_bounds: Dict[str, float] = field(default_factory=dict)
    floored: List[str] = field(default_factory=list)

    @property
    def A(self) -> float:
        return self.l * self.a0

    @property
    def B(self) -> float:
        return self.l * self.b0

    @property
    def D(self) -> float:
        return self.l * self.d0

    @property
    def binding_h(self) -> str:
        return min(self.h_bounds, key=self.h_bounds.__getitem__) if self.h_bounds else "cap"

    @property
    def binding_eps(self) -> str:
        return min(self.eps_bounds, key=self.eps_bounds.__getitem__) if self.eps_bounds else "cap"

    def fbar(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Comparison functions bounding ``gamma`` and ``mu`` along a line of constant u."""
        return _fbar(np.asarray(v, dtype=float), self.box)

    def F1_F2(self, u: float, v_grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Majorants of ``|nu|`` and ``|mu|`` on the line ``u`` as functions of ``v``."""
        return _majorants(u, np.asarray(v_grid, dtype=float), self.K_bar, self.L_bar, self.M, self.m0)

    def recommended_segments(self, nv: int) -> int:
        """``ceil(v* / eps_rec)``, capped so every segment keeps at least four v-cells."""
        if self.eps_rec >= self.v_star * (1.0 - 1e-12):
            return 1
        wanted = math.ceil(self.v_star / self.eps_rec - 1e-12)
        return int(max(1, min(wanted, nv // 4)))

    def summary(self) -> Dict[str, object]:
        return {
            "l": self.l,
            "A": self.A,
            "B": self.B,
            "D": self.D,
            "a0": self.a0,
            "b0": self.b0,
            "d0": self.d0,
            "g0": self.g0,
            "m0": self.m0,
            "r_m": self.r_m,
            "r_M": self.r_M,
            "G": self.G,
            "M": self.M,
            "K_bar": self.K_bar,
            "L_bar": self.L_bar,
            "H1": self.H1,
            "H2": self.H2,
            "h_data": self.h_data,
            "h_rec": self.h_rec,
            "eps_rec": self.eps_rec,
            "u_star": self.u_star,
            "v_star": self.v_star,
            "h_bounds": dict(self.h_bounds),
            "eps_bounds": dict(self.eps_bounds),
            "binding_h": self.binding_h,
            "binding_eps": self.binding_eps,
            "floored": list(self.floored),
            "box": {
                name: getattr(self.box, name)
                for name in BoxSuprema.__dataclass_fields__  # type: ignore[attr-defined]
            },
        }


def box_suprema(
    alpha_range: Range,
    beta_range: Range,
    r_low: float,
    r_high: float,
    l: float,
    D: float,
    eos: EosModel,
    geometry: Geometry,
    *,
    nodes: int = BOX_ALPHA_BETA_NODES,
    radius_nodes: int = BOX_RADIUS_NODES,
) -> BoxSuprema:
    alpha_axis = np.linspace(alpha_range[0], alpha_range[1], nodes)
    beta_axis = np.linspace(beta_range[0], beta_range[1], nodes)
    aa, bb = np.meshgrid(alpha_axis, beta_axis, indexing="ij")
    lo, hi = eos.chi_range
    keep = (aa + bb >= lo) & (aa + bb <= hi)
    if not np.any(keep):
        raise RangeError(
            f"no state with alpha in [{alpha_range[0]:.6g}, {alpha_range[1]:.6g}], "
            f"beta in [{beta_range[0]:.6g}, {beta_range[1]:.6g}] lies in the equation-of-state range"
        )
    alpha = aa[keep]
    beta = bb[keep]
    eta, slope = eos.eta_and_slope(alpha + beta)
    chi = alpha - beta
    c_plus = 0.5 * chi + eta
    c_minus = 0.5 * chi - eta

    radius = np.linspace(r_low, r_high, radius_nodes)
    al = alpha[:, None]
    be = beta[:, None]
    rr = radius[None, :]
    coeffs = transport_coefficients(al, be, rr, geometry, eos)
    F_alpha, F_beta, F_r = source_partials(CharState(al, be), rr, geometry, eos)
    if geometry.spherical:
        F = -eta[:, None] * chi[:, None] / rr
    else:
        F = np.zeros_like(rr * al)

    def sup(values: np.ndarray) -> float:
        return float(np.max(np.abs(values)))

    def positive(values: np.ndarray) -> float:
        return float(max(np.max(values), 0.0))

    return BoxSuprema(
        F_bar=sup(F),
        F_alpha=sup(F_alpha),
        F_beta=sup(F_beta),
        F_r=sup(F_r),
        C_plus_alpha=sup(0.5 + slope),
        C_plus_beta=sup(-0.5 + slope),
        C_minus_alpha=sup(0.5 - slope),
        C_minus_beta=sup(-0.5 - slope),
        C_pm=sup(0.5 / eta),
        c_plus_dagger=sup(c_plus),
        c_minus_dagger=sup(c_minus),
        c_plus_drop=positive(-c_plus),
        c_plus_rise=positive(c_plus),
        c_minus_drop=positive(-c_minus),
        c_minus_rise=positive(c_minus),
        Q1=l * sup(coeffs.a1),
        Q2=float(np.max(np.abs(coeffs.a2) * D + np.abs(coeffs.c2) * l)),
        S1=float(np.max(np.abs(coeffs.b1) * D + np.abs(coeffs.c1) * l)),
        S2=l * sup(coeffs.a2),
        alpha_low=float(alpha_range[0]),
        alpha_high=float(alpha_range[1]),
        beta_low=float(beta_range[0]),
        beta_high=float(beta_range[1]),
        states=int(alpha.size),
    )


def _fbar(v: np.ndarray, box: BoxSuprema) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    coupling = 1.0 + v**2 * box.S1 * box.S2 * np.exp(v * (box.Q1 + box.Q2))
    f1 = np.exp(v * box.Q1) * coupling
    f3 = np.exp(v * box.Q2) * coupling
    f2 = v * box.S1 * np.exp(v * box.Q2) * f1
    f4 = v * box.S2 * np.exp(v * box.Q1) * f3
    return f1, f2, f3, f4


def _majorants(
    u: float, v: np.ndarray, K_bar: float, L_bar: float, M: float, m0: float
) -> Tuple[np.ndarray, np.ndarray]:
    f1 = np.exp(u * K_bar) * (1.0 + u * L_bar * np.exp(v * L_bar) * M)
    f2 = u * K_bar * L_bar * np.exp(u * K_bar + v * L_bar)
    if v.size < 2:
        return f1, np.exp(v * L_bar) * m0
    dv = float(v[1] - v[0])
    growth = cumtrapz(f2, dv)
    F1 = f1 + f2 * np.exp(growth) * cumtrapz(f1 * np.exp(-growth), dv)
    F2 = np.exp(v * L_bar) * (m0 + K_bar * cumtrapz(F1, dv))
    return F1, F2


def _limit(numerator: float, denominator: float, cap: float, *, vacuous: bool = False) -> float:
    """``numerator / denominator`` clipped to ``[0, cap]``; zero denominators do not constrain."""
    if vacuous or denominator == 0.0:
        return cap
    if math.isinf(denominator) or math.isnan(denominator) or math.isnan(numerator):
        return 0.0
    return float(min(max(numerator / denominator, 0.0), cap))


def _weighted(factor: float, size: float) -> float:
    return factor * size if size != 0.0 else 0.0


def _data_size(values: np.ndarray, scale: float) -> float:
    """``sup|values|``, with round-off sized variation reported as exactly zero."""
    size = float(np.max(np.abs(values))) if values.size else 0.0
    return size if size > _NEGLIGIBLE * (1.0 + scale) else 0.0


def _spread(value: float, cap: float) -> float:
    return float(min(value, cap)) if math.isfinite(value) else float(cap)


def _first_order_bounds(box: BoxSuprema, v_cap: float, g0: float, m0: float) -> Tuple[float, float]:
    with np.errstate(over="ignore", invalid="ignore"):
        f1, f2, f3, f4 = (float(x) for x in _fbar(np.array(v_cap), box))
    G = _weighted(f1, g0) + _weighted(f2, m0)
    M = _weighted(f3, m0) + _weighted(f4, g0)
    return G, M


def _data_admissible_depth(cm: CharacteristicData, A: float, B: float, D: float, r_m: float, r_M: float) -> float:
    slack = 1e-12
    ok = (
        (np.abs(cm.alpha) <= A * (1.0 + slack) + slack)
        & (np.abs(cm.beta) <= B * (1.0 + slack) + slack)
        & (np.abs(cm.delta) <= D * (1.0 + slack) + slack)
        & (cm.r >= 0.5 * r_m * (1.0 - slack))
        & (cm.r <= 1.5 * r_M * (1.0 + slack))
    )
    if np.all(ok):
        return float(cm.param[-1])
    first_bad = int(np.argmin(ok))
    return float(cm.param[first_bad - 1]) if first_bad > 0 else 0.0


def _clipped(low: float, high: float, spread: float, bound: float) -> Range:
    return max(-bound, low - spread), min(bound, high + spread)


def estimate_strip_width(
    cp: CharacteristicData,
    cm: CharacteristicData,
    eos: EosModel,
    geometry: Geometry,
    l: float = 2.0,
    *,
    u_star: Optional[float] = None,
    v_star: Optional[float] = None,
) -> StripWidthEstimate:
    """Evaluate the smallness conditions and return recommended ``(h, eps)``."""

    if not l > 1.0:
        raise InvalidL(f"l must exceed 1, got {l}")
    u_cap = float(cm.param[-1] if u_star is None else min(u_star, cm.param[-1]))
    v_cap = float(cp.param[-1] if v_star is None else v_star)

    a0 = float(np.max(np.abs(cp.alpha)))
    b0 = float(np.max(np.abs(cp.beta)))
    d0 = _data_size(cp.delta, b0)
    r_m = float(np.min(cp.r))
    r_M = float(np.max(cp.r))
    A, B, D = l * a0, l * b0, l * d0

    within = cm.param <= u_cap * (1.0 + 1e-12)
    row = cm.head(int(np.count_nonzero(within)))
    h_data = min(_data_admissible_depth(row, A, B, D, r_m, r_M), u_cap)
    upto = row.param <= h_data * (1.0 + 1e-12) if h_data > 0.0 else row.param <= 0.0
    m0 = float(np.max(np.abs(row.mu[upto])))
    g0 = _data_size(row.gamma[upto], a0)

    alpha_seen = np.concatenate([cp.alpha, row.alpha[upto]])
    beta_seen = np.concatenate([cp.beta, row.beta[upto]])
    alpha_lo, alpha_hi = float(alpha_seen.min()), float(alpha_seen.max())
    beta_lo, beta_hi = float(beta_seen.min()), float(beta_seen.max())

    # alpha moves by at most l F_bar v* along C+ lines, beta by M F_bar u* along C- lines
    spread_a = spread_b = 0.0
    for passes in range(1, _BOX_PASSES + 1):
        box = box_suprema(
            _clipped(alpha_lo, alpha_hi, spread_a, A),
            _clipped(beta_lo, beta_hi, spread_b, B),
            0.5 * r_m,
            1.5 * r_M,
            l,
            D,
            eos,
            geometry,
        )
        G, M = _first_order_bounds(box, v_cap, g0, m0)
        grown_a = _spread(_weighted(l * v_cap, box.F_bar), 2.0 * A)
        grown_b = _spread(_weighted(M * u_cap, box.F_bar), 2.0 * B)
        if grown_a <= spread_a * (1.0 + 1e-9) and grown_b <= spread_b * (1.0 + 1e-9):
            break
        spread_a, spread_b = max(spread_a, grown_a), max(spread_b, grown_b)
    LOGGER.debug("Bootstrap box settled after %d passes (spread %.3g, %.3g)", passes, spread_a, spread_b)

    F_bar = box.F_bar
    MF = _weighted(M, F_bar)
    L_bar = box.C_pm * (box.C_minus_alpha * l * F_bar + box.C_minus_beta * D)
    K_bar = box.C_pm * (box.C_plus_alpha * G + box.C_plus_beta * MF)
    shared = F_bar * (M * L_bar + l * K_bar) if F_bar != 0.0 else 0.0
    H1 = l * (box.F_alpha * G + box.F_beta * MF + _weighted(box.F_r * box.c_minus_dagger, M)) + shared
    H2 = M * (box.F_alpha * l * F_bar + box.F_beta * D + box.F_r * box.c_plus_dagger * l) + shared

    floored: List[str] = []
    h_bounds = {
        "data": h_data,
        "alpha_growth": (l - 1.0) * _limit(a0, G, math.inf),
        "beta_growth": (l - 1.0) * _limit(b0, MF, math.inf),
        "radius_cminus": min(
            _limit(0.5 * r_m, _weighted(M, box.c_minus_drop), u_cap),
            _limit(0.5 * r_M, _weighted(M, box.c_minus_rise), u_cap),
        ),
        "delta_growth": _limit(D - d0, H2, u_cap, vacuous=d0 == 0.0),
    }
    h_bounds = {name: min(value, u_cap) for name, value in h_bounds.items()}
    h_rec = min(h_bounds.values())
    if not h_rec > 0.0:
        h_rec = u_cap * _FLOOR_FRACTION
        floored.append("h")

    halvings = 0
    while halvings < _MAX_HALVINGS:
        F1_start, _ = _majorants(h_rec, np.array([0.0]), K_bar, L_bar, M, m0)
        if float(F1_start[0]) <= l:
            break
        h_rec *= 0.5
        halvings += 1
    if halvings:
        h_bounds["nu_majorant"] = h_rec

    span = row.param <= h_rec * (1.0 + 1e-12)
    alpha_row = float(np.max(np.abs(row.alpha[span])))
    beta_row = float(np.max(np.abs(row.beta[span])))
    r_row_min = float(np.min(row.r[span]))
    r_row_max = float(np.max(row.r[span]))

    v_scan = np.linspace(0.0, v_cap, SCAN_NODES)
    with np.errstate(over="ignore", invalid="ignore"):
        F1, F2 = _majorants(h_rec, v_scan, K_bar, L_bar, M, m0)
    admissible = (F1 <= l) & (F2 <= M * (1.0 + 1e-12))
    if np.all(admissible):
        eps_scan = v_cap
    else:
        first_bad = int(np.argmin(admissible))
        eps_scan = float(v_scan[first_bad - 1]) if first_bad > 0 else 0.0

    eps_bounds = {
        "beta_box": _limit(B - beta_row, D, v_cap),
        "alpha_box": _limit(A - alpha_row, l * F_bar, v_cap),
        "radius_cplus": min(
            _limit(r_row_min - 0.5 * r_m, l * box.c_plus_drop, v_cap),
            _limit(1.5 * r_M - r_row_max, l * box.c_plus_rise, v_cap),
        ),
        "gamma_growth": _limit(G - g0, H1, v_cap, vacuous=G == g0 == 0.0),
        "majorants": eps_scan,
    }
    eps_rec = min(eps_bounds.values())
    if not eps_rec > 0.0:
        eps_rec = v_cap * _FLOOR_FRACTION
        floored.append("eps")

    estimate = StripWidthEstimate(
        l=l,
        a0=a0,
        b0=b0,
        d0=d0,
        r_m=r_m,
        r_M=r_M,
        g0=g0,
        m0=m0,
        G=float(G),
        M=float(M),
        K_bar=float(K_bar),
        L_bar=float(L_bar),
        H1=float(H1),
        H2=float(H2),
        h_data=h_data,
        h_rec=float(h_rec),
        eps_rec=float(eps_rec),
        u_star=u_cap,
        v_star=v_cap,
        box=box,
        h_bounds=h_bounds,
        eps_bounds=eps_bounds,
        floored=floored,
    )
    LOGGER.info(
        "Strip estimate h_rec=%.4g (%s) eps_rec=%.4g (%s) G=%.4g M=%.4g",
        estimate.h_rec,
        estimate.binding_h,
        estimate.eps_rec,
        estimate.binding_eps,
        estimate.G,
        estimate.M,
    )
    if floored:
        LOGGER.warning("Strip estimate floored %s; smallness conditions are not met by these data", floored)
    return estimate


__all__ = [
    "BoxSuprema",
    "StripWidthEstimate",
    "box_suprema",
    "estimate_strip_width",
    "BOX_ALPHA_BETA_NODES",
    "BOX_RADIUS_NODES",
]
