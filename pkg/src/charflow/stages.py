"""Solver stages shared by the runners and the refinement study.

Each stage is a pure function of a :class:`~charflow.scenario.Scenario`;
file output, logging setup and exit codes live in :mod:`charflow.pipeline`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

from charflow.errors import CharflowError, EpsilonGuardHit, InvalidL
from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.scenario import Scenario, build_eos, free_data
from charflow.solver.constraints import CharacteristicData, corner_compatibility, solve_pair
from charflow.solver.estimate import StripWidthEstimate, estimate_strip_width
from charflow.solver.goursat import GoursatGrid, GridSpec, IterationTrace, extend_strip
from charflow.solver.hodograph import PhysicalField, to_physical
from charflow.solver.marching import marching_oracle

LOGGER = logging.getLogger(__name__)


@dataclass(slots=True)
class Characteristics:
    """Constraint solutions on the solver spacing plus the oversampled originals."""

    cp: CharacteristicData
    cm: CharacteristicData
    eos: EosModel
    geometry: Geometry
    raw_cp: CharacteristicData
    raw_cm: CharacteristicData

    @property
    def truncated(self) -> bool:
        return self.cm.truncated


@dataclass(slots=True)
class Solution:
    scenario: Scenario
    characteristics: Characteristics
    spec: GridSpec
    grid: GoursatGrid
    traces: List[IterationTrace]
    segments: int
    estimate: Optional[StripWidthEstimate] = None
    physical: Optional[PhysicalField] = None
    notes: List[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return sum(trace.iterations for trace in self.traces)


def solve_characteristics(scenario: Scenario, threads: int = 1) -> Characteristics:
    eos = build_eos(scenario.eos)
    geometry = scenario.geometry_model()
    plus, minus = free_data(scenario)
    cp, cm = solve_pair(plus, minus, eos, geometry, scenario.data.guard, threads=threads)
    step = scenario.oversampling
    LOGGER.info(
        "Constraints solved: C+ %d samples, C- %d samples%s",
        cp.n,
        cm.n,
        f" (truncated at u={cm.u_bar:.6g})" if cm.truncated else "",
    )
    return Characteristics(
        cp=cp.every(step),
        cm=cm.every(step),
        eos=eos,
        geometry=geometry,
        raw_cp=cp,
        raw_cm=cm,
    )


def strip_estimate(chars: Characteristics, scenario: Scenario) -> Optional[StripWidthEstimate]:
    """Strip-width estimate, or ``None`` when the data leave its domain of definition."""
    try:
        return estimate_strip_width(
            chars.cp,
            chars.cm,
            chars.eos,
            chars.geometry,
            scenario.solver.l,
            u_star=scenario.data.u_star,
            v_star=scenario.data.v_star,
        )
    except InvalidL:
        raise
    except CharflowError as exc:
        LOGGER.warning("Strip estimate unavailable: %s", exc)
        return None


def choose_segments(scenario: Scenario, estimate: Optional[StripWidthEstimate]) -> int:
    if scenario.solver.segments > 0:
        return scenario.solver.segments
    if estimate is None:
        return 1
    return estimate.recommended_segments(scenario.grid.nv)


def require_depth(chars: Characteristics, spec: GridSpec) -> None:
    """Raise when the C- data stop short of the requested strip depth."""
    if chars.cm.n < spec.nu + 1:
        cm = chars.cm
        raise EpsilonGuardHit(float(cm.u_bar or cm.param[-1]), float(cm.r_guard or 0.0))


def solve_scenario(
    scenario: Scenario,
    threads: int = 1,
    *,
    chars: Optional[Characteristics] = None,
    with_physical: bool = True,
) -> Solution:
    """Constraints, strip estimate, segmented Picard solve and hodograph map."""
    chars = chars or solve_characteristics(scenario, threads)
    spec = scenario.grid_spec()
    require_depth(chars, spec)
    estimate = strip_estimate(chars, scenario)
    segments = choose_segments(scenario, estimate)
    notes: List[str] = []
    ok, mismatch = corner_compatibility(chars.cp, chars.cm, eos=chars.eos, geometry=chars.geometry)
    if not ok:
        notes.append(f"corner mismatch {mismatch}")
    if estimate is not None and spec.h > estimate.h_rec:
        notes.append(f"strip depth {spec.h:.6g} exceeds recommended {estimate.h_rec:.6g}")

    grid, traces = extend_strip(
        chars.cp,
        chars.cm,
        spec,
        chars.eos,
        chars.geometry,
        segments,
        scenario.picard_settings(threads),
        estimate=estimate,
    )
    physical = to_physical(grid, chars.eos, scenario.raster_spec()) if with_physical else None
    return Solution(
        scenario=scenario,
        characteristics=chars,
        spec=spec,
        grid=grid,
        traces=traces,
        segments=segments,
        estimate=estimate,
        physical=physical,
        notes=notes,
    )


def solve_oracle(chars: Characteristics, spec: GridSpec) -> GoursatGrid:
    return marching_oracle(chars.cp, chars.cm, spec, chars.eos, chars.geometry)


__all__ = [
    "Characteristics",
    "Solution",
    "solve_characteristics",
    "strip_estimate",
    "choose_segments",
    "require_depth",
    "solve_scenario",
    "solve_oracle",
]
