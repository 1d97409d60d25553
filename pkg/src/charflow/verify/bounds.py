"""Ledger of the a-priori inequalities: measured value against bound, with margins."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.solver.constraints import CharacteristicData, chi_bound_profile, chi_representation
from charflow.solver.estimate import StripWidthEstimate
from charflow.solver.goursat import GoursatGrid

LOGGER = logging.getLogger(__name__)


@dataclass(slots=True)
class BoundCheck:
    name: str
    bound: float
    attained: float
    margin: float
    tolerance: float
    guaranteed: bool

    @property
    def violated(self) -> bool:
        return self.margin < -self.tolerance

    def as_dict(self) -> Dict[str, object]:
        return {
            "bound": self.bound,
            "attained": self.attained,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "guaranteed": self.guaranteed,
            "violated": self.violated,
        }


@dataclass(slots=True)
class BoundReport:
    checks: List[BoundCheck] = field(default_factory=list)
    within_recommended: bool = True

    def get(self, name: str) -> BoundCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def violations(self) -> List[str]:
        return [check.name for check in self.checks if check.violated]

    @property
    def passed(self) -> bool:
        """True unless an inequality that applies to this run is violated."""
        return not any(check.violated and check.guaranteed for check in self.checks)

    def as_dict(self) -> Dict[str, object]:
        return {
            "within_recommended": self.within_recommended,
            "passed": self.passed,
            "checks": {check.name: check.as_dict() for check in self.checks},
        }


def _upper(name: str, attained: float, bound: float, guaranteed: bool, tolerance: float) -> BoundCheck:
    return BoundCheck(name, bound, attained, bound - attained, tolerance, guaranteed)


def _lower(name: str, attained: float, bound: float, guaranteed: bool, tolerance: float) -> BoundCheck:
    return BoundCheck(name, bound, attained, attained - bound, tolerance, guaranteed)


def bound_checks(
    cp: CharacteristicData,
    cm: CharacteristicData,
    estimate: StripWidthEstimate,
    grid: GoursatGrid,
    eos: EosModel,
    geometry: Geometry,
) -> BoundReport:
    """Evaluate each inequality and report ``margin = bound - attained``.

    The chi bound on C+ holds for any data. The bootstrap and first-derivative
    bounds are only promised when the grid depth and width stay within the
    recommended ``h_rec`` and ``eps_rec``; outside that regime they are
    reported with ``guaranteed=False``.
    """

    spacing = cp.spacing
    data_scale = max(1.0, float(np.max(np.abs(cp.beta))))
    data_tol = 10.0 * spacing**2 * data_scale
    report = BoundReport()

    bound, attained = chi_bound_profile(cp)
    k = int(np.argmin(bound - attained))
    report.checks.append(_upper("chi_bound", float(attained[k]), float(bound[k]), True, data_tol))

    rebuilt = chi_representation(cp, eos, geometry)
    error = float(np.max(np.abs(rebuilt - (cp.alpha - cp.beta))))
    report.checks.append(_upper("chi_representation", error, data_tol, True, 0.0))

    h = float(grid.u_grid[-1])
    width = float(grid.v_grid[-1])
    slack = 1e-12
    inside = h <= estimate.h_rec * (1 + slack) and width <= estimate.eps_rec * (1 + slack)
    report.within_recommended = inside
    valid = grid.valid
    grid_tol = 1e-10

    def sup(values: np.ndarray) -> float:
        picked = np.abs(values[valid])
        return float(picked.max()) if picked.size else 0.0

    report.checks.extend(
        [
            _upper("ba_nu", sup(grid.nu), estimate.l, inside, grid_tol * estimate.l),
            _upper("ba_alpha", sup(grid.alpha), estimate.A, inside, grid_tol * max(1.0, estimate.A)),
            _upper("ba_beta", sup(grid.beta), estimate.B, inside, grid_tol * max(1.0, estimate.B)),
            _upper("ba_delta", sup(grid.delta), estimate.D, inside, grid_tol * max(1.0, estimate.D)),
        ]
    )
    radii = grid.r[valid]
    if radii.size:
        report.checks.append(_lower("ba_r_min", float(radii.min()), 0.5 * estimate.r_m, inside, grid_tol))
        report.checks.append(_upper("ba_r_max", float(radii.max()), 1.5 * estimate.r_M, inside, grid_tol))

    corner = grid.v_grid <= min(estimate.eps_rec, width) * (1 + slack)
    corner_ok = valid[:, corner]
    gamma = np.abs(grid.gamma[:, corner][corner_ok])
    mu = np.abs(grid.mu[:, corner][corner_ok])
    corner_inside = h <= estimate.h_rec * (1 + slack)
    report.checks.append(
        _upper("gamma_G", float(gamma.max()) if gamma.size else 0.0, estimate.G, corner_inside, grid_tol * max(1.0, estimate.G))
    )
    report.checks.append(
        _upper("mu_M", float(mu.max()) if mu.size else 0.0, estimate.M, corner_inside, grid_tol * max(1.0, estimate.M))
    )

    violated = report.violations()
    if violated:
        LOGGER.warning(
            "Bound margins negative for %s (within recommended widths: %s)",
            ", ".join(violated),
            inside,
        )
    return report


__all__ = ["BoundCheck", "BoundReport", "bound_checks"]
