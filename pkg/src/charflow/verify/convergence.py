"""Refinement studies: fitted convergence orders per error family."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from charflow.scenario import Scenario
from charflow.solver.goursat import GoursatGrid
from charflow.solver.hodograph import jacobian_field
from charflow.stages import Characteristics, solve_characteristics, solve_oracle, solve_scenario
from charflow.verify.euler import euler_residuals
from charflow.verify.residuals import residual_fields
from charflow.workers.pool import map_ordered

LOGGER = logging.getLogger(__name__)

MIN_LEVELS = 3
TOLERANCE = 0.3
EXACT_NORM = 1e-12

# family -> (target order, "eq" for |order - target| <= tol or "min" for order >= target - tol)
DEFAULT_TARGETS: Dict[str, Tuple[float, str]] = {
    "constraints": (4.0, "eq"),
    "picard_fields": (2.0, "eq"),
    "residuals": (2.0, "eq"),
    "dual_solver": (2.0, "min"),
    "jacobian": (2.0, "eq"),
    "euler": (1.0, "min"),
    "euler_raster": (1.0, "min"),
}
_RESIDUAL_FAMILIES = ("char_alpha", "char_beta", "hodo_v", "hodo_u")


@dataclass(slots=True)
class FamilyResult:
    name: str
    norms: List[float]
    orders: List[float]
    order: Optional[float]
    target: float
    mode: str
    exact: bool
    passed: bool

    def as_dict(self) -> Dict[str, object]:
        return {
            "norms": list(self.norms),
            "orders": list(self.orders),
            "order": "exact" if self.exact else self.order,
            "target": self.target,
            "mode": self.mode,
            "passed": self.passed,
        }


@dataclass(slots=True)
class ConvergenceStudy:
    scenario: str
    levels: int
    spacings: List[float]
    families: Dict[str, FamilyResult] = field(default_factory=dict)
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.families.values())

    def as_dict(self) -> Dict[str, object]:
        return {
            "scenario": self.scenario,
            "levels": self.levels,
            "spacings": list(self.spacings),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "families": {name: result.as_dict() for name, result in self.families.items()},
        }


@dataclass(slots=True)
class _Level:
    spacing: float
    chars: Characteristics
    picard: GoursatGrid
    marching: GoursatGrid
    residual: float
    jacobian: float
    euler: float
    raster: Optional[float]
    dual: float


def observed_orders(norms: Sequence[float]) -> List[float]:
    """``log2(e_k / e_{k+1})`` for successive norms."""
    orders: List[float] = []
    for coarse, fine in zip(norms[:-1], norms[1:]):
        if coarse > 0.0 and fine > 0.0:
            orders.append(math.log2(coarse / fine))
        else:
            orders.append(math.nan)
    return orders


def fit_order(norms: Sequence[float]) -> Optional[float]:
    """Mean of the last two observed orders (the last one when only one exists)."""
    tail = [order for order in observed_orders(norms)[-2:] if math.isfinite(order)]
    if not tail:
        return None
    return float(sum(tail) / len(tail))


def assess(
    name: str,
    norms: Sequence[float],
    target: float,
    mode: str = "eq",
    tolerance: float = TOLERANCE,
) -> FamilyResult:
    values = [float(value) for value in norms]
    exact = bool(values) and max(values) < EXACT_NORM
    order = None if exact else fit_order(values)
    if exact:
        passed = True
    elif order is None:
        passed = False
    elif mode == "min":
        passed = order >= target - tolerance
    else:
        passed = abs(order - target) <= tolerance
    return FamilyResult(
        name=name,
        norms=values,
        orders=observed_orders(values),
        order=order,
        target=target,
        mode=mode,
        exact=exact,
        passed=passed,
    )


def constraint_differences(coarse: Characteristics, fine: Characteristics) -> float:
    """Sup difference of the derived constraint data between two refinement levels."""
    worst = 0.0
    for a, b, names in (
        (coarse.raw_cp, fine.raw_cp, ("alpha", "r", "gamma", "mu")),
        (coarse.raw_cm, fine.raw_cm, ("beta", "r", "delta", "nu")),
    ):
        count = min(a.n, (b.n + 1) // 2)
        for name in names:
            diff = np.abs(getattr(a, name)[:count] - getattr(b, name)[: 2 * count - 1 : 2])
            worst = max(worst, float(diff.max()))
    return worst


def grid_differences(coarse: GoursatGrid, fine: GoursatGrid) -> float:
    """Sup difference of the Picard fields on the coarse nodes."""
    valid = coarse.valid & fine.valid[::2, ::2]
    worst = 0.0
    for name in ("alpha", "beta", "t", "r"):
        diff = np.abs(getattr(coarse, name) - getattr(fine, name)[::2, ::2])[valid]
        if diff.size:
            worst = max(worst, float(diff.max()))
    return worst


def _solve_level(scenario: Scenario) -> _Level:
    chars = solve_characteristics(scenario)
    solution = solve_scenario(scenario, chars=chars)
    grid = solution.grid
    marching = solve_oracle(chars, solution.spec)
    fields = residual_fields(grid, chars.eos, chars.geometry)
    valid = grid.valid & marching.valid
    residual = max(float(np.max(np.abs(fields[name][grid.valid]))) for name in _RESIDUAL_FAMILIES)
    jac = jacobian_field(grid, chars.eos).mismatch(grid.valid)
    euler = euler_residuals(grid, solution.physical, chars.eos, chars.geometry)
    dual = 0.0
    for name in ("alpha", "beta", "t", "r"):
        diff = np.abs(getattr(grid, name) - getattr(marching, name))[valid]
        if diff.size:
            dual = max(dual, float(diff.max()))
    LOGGER.info("Refinement level %s solved", solution.spec.label())
    return _Level(
        spacing=max(solution.spec.du, solution.spec.dv),
        chars=chars,
        picard=grid,
        marching=marching,
        residual=residual,
        jacobian=jac,
        euler=euler.node_sup,
        raster=euler.raster_sup,
        dual=dual,
    )


def convergence_study(
    scenario: Scenario,
    levels: int = 3,
    *,
    threads: int = 1,
    targets: Optional[Mapping[str, Tuple[float, str]]] = None,
    tolerance: float = TOLERANCE,
) -> ConvergenceStudy:
    """Solve ``levels`` successively halved grids and fit the order of each family.

    Levels run concurrently when ``threads > 1``; each level solves serially
    and the results are assembled in level order.
    """

    if levels < MIN_LEVELS:
        raise ValueError(f"a convergence study needs at least {MIN_LEVELS} levels, got {levels}")
    wanted = dict(DEFAULT_TARGETS)
    wanted.update(targets or {})
    solved = map_ordered(_solve_level, [scenario.refined(k) for k in range(levels)], threads)

    norms: Dict[str, List[float]] = {
        "constraints": [constraint_differences(a.chars, b.chars) for a, b in zip(solved[:-1], solved[1:])],
        "picard_fields": [grid_differences(a.picard, b.picard) for a, b in zip(solved[:-1], solved[1:])],
        "residuals": [level.residual for level in solved],
        "dual_solver": [level.dual for level in solved],
        "jacobian": [level.jacobian for level in solved],
        "euler": [level.euler for level in solved],
    }
    if all(level.raster is not None for level in solved):
        norms["euler_raster"] = [float(level.raster) for level in solved]
    study = ConvergenceStudy(
        scenario=scenario.name,
        levels=levels,
        spacings=[level.spacing for level in solved],
        tolerance=tolerance,
    )
    for name, values in norms.items():
        if name not in wanted:
            continue
        target, mode = wanted[name]
        study.families[name] = assess(name, values, target, mode, tolerance)
        result = study.families[name]
        LOGGER.info(
            "Convergence %s: order %s (target %s %.1f) %s",
            name,
            "exact" if result.exact else (f"{result.order:.3f}" if result.order is not None else "n/a"),
            ">=" if mode == "min" else "=",
            target,
            "ok" if result.passed else "FAIL",
        )
    return study


__all__ = [
    "DEFAULT_TARGETS",
    "TOLERANCE",
    "FamilyResult",
    "ConvergenceStudy",
    "observed_orders",
    "fit_order",
    "assess",
    "constraint_differences",
    "grid_differences",
    "convergence_study",
]
