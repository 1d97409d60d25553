"""Residual, bound, contraction, Euler and refinement checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from charflow.errors import InsufficientIterations
from charflow.solver.goursat import TRACED, IterationTrace
from charflow.stages import solve_scenario
from charflow.verify.bounds import bound_checks
from charflow.verify.contraction import contraction_report, geometric_rate
from charflow.verify.convergence import assess, convergence_study, fit_order, observed_orders
from charflow.verify.euler import euler_residuals
from charflow.verify.residuals import residual_suite
from conftest import STATIC, build_scenario


def _synthetic_trace(norms, converged=True) -> IterationTrace:
    trace = IterationTrace()
    for value in norms:
        trace.record({name: value for name in TRACED}, inner=1)
    trace.converged = converged
    return trace


def _residuals(solution):
    chars = solution.characteristics
    return residual_suite(solution.grid, chars.cp, chars.cm, chars.eos, chars.geometry)


@pytest.fixture()
def smooth_solution(smooth_scenario):
    return solve_scenario(smooth_scenario)


@pytest.fixture()
def static_solution():
    scenario = build_scenario(
        eos=STATIC["eos"], data=STATIC["data"], grid={"nu": 8, "nv": 16}, raster={"nt": 9, "nr": 9}
    )
    return solve_scenario(scenario)


# --- residuals ---------------------------------------------------------------


def test_static_residuals_vanish(static_solution) -> None:
    report = _residuals(static_solution)
    assert report.passed
    for name, entry in report.entries.items():
        assert entry.sup < 1e-11, name


def test_smooth_residuals_within_thresholds(smooth_solution) -> None:
    report = _residuals(smooth_solution)
    assert report.passed, report.failures()
    assert report.entries["boundary"].sup <= 1e-12
    assert set(report.as_dict()["entries"]) >= {"char_alpha", "char_beta", "hodo_v", "hodo_u", "boundary"}


def test_tight_constants_flag_failures(smooth_solution) -> None:
    chars = smooth_solution.characteristics
    report = residual_suite(
        smooth_solution.grid, chars.cp, chars.cm, chars.eos, chars.geometry, {"char_alpha": 1e-12}
    )
    assert "char_alpha" in report.failures()
    assert not report.passed


# --- bounds ------------------------------------------------------------------


def test_bound_ledger(smooth_solution) -> None:
    chars = smooth_solution.characteristics
    report = bound_checks(
        chars.cp, chars.cm, smooth_solution.estimate, smooth_solution.grid, chars.eos, chars.geometry
    )
    names = {check.name for check in report.checks}
    assert {"chi_bound", "chi_representation", "ba_nu", "ba_alpha", "gamma_G", "mu_M"} <= names
    assert not report.get("chi_bound").violated
    assert not report.get("chi_representation").violated
    assert report.get("chi_bound").guaranteed
    with pytest.raises(KeyError):
        report.get("missing")


# --- contraction -------------------------------------------------------------


def test_static_iteration_is_immediate(static_solution) -> None:
    report = contraction_report(static_solution.traces[0])
    assert report.immediate
    assert not report.flagged


def test_short_unconverged_trace_is_rejected() -> None:
    with pytest.raises(InsufficientIterations):
        contraction_report(_synthetic_trace([1e-2, 5e-3], converged=False))


def test_geometric_decay_is_measured() -> None:
    norms = [10.0**-k for k in range(1, 7)]
    report = contraction_report(_synthetic_trace(norms))
    assert report.rate == pytest.approx(0.1)
    assert report.monotone_tail
    assert not report.flagged


def test_stalled_tail_is_flagged() -> None:
    report = contraction_report(_synthetic_trace([1e-2, 1e-3, 2e-3, 1e-4, 1e-11]))
    assert not report.monotone_tail
    assert report.flagged
    assert report.max_tail_ratio == pytest.approx(2.0)


def test_smooth_run_contracts(smooth_solution) -> None:
    report = contraction_report(smooth_solution.traces[0])
    assert not report.flagged


def test_geometric_rate_needs_two_positive_norms() -> None:
    assert geometric_rate([0.0, 1e-3]) is None


# --- Euler -------------------------------------------------------------------


def test_static_state_solves_euler(static_solution) -> None:
    chars = static_solution.characteristics
    report = euler_residuals(static_solution.grid, static_solution.physical, chars.eos, chars.geometry)
    assert report.node_count > 0
    assert report.node_sup < 1e-10
    assert report.raster_sup is not None and report.raster_sup < 1e-10


def test_smooth_euler_residual_is_small(smooth_solution) -> None:
    chars = smooth_solution.characteristics
    report = euler_residuals(smooth_solution.grid, smooth_solution.physical, chars.eos, chars.geometry)
    spacing = max(smooth_solution.spec.du, smooth_solution.spec.dv)
    assert report.node_sup <= 50.0 * spacing
    assert report.raster_sup is None


# --- refinement --------------------------------------------------------------


def test_observed_orders() -> None:
    assert observed_orders([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0])
    assert math.isnan(observed_orders([1.0, 0.0])[0])
    assert fit_order([1.0, 0.5, 0.125]) == pytest.approx(1.5)
    assert fit_order([0.0, 0.0]) is None


def test_assess_modes() -> None:
    assert assess("exact", [0.0, 0.0, 0.0], 2.0).exact
    assert assess("eq", [1.0, 0.25, 0.0625], 2.0).passed
    assert not assess("eq", [1.0, 0.5, 0.25], 2.0).passed
    assert assess("min", [1.0, 0.125, 0.015625], 1.0, mode="min").passed
    assert assess("exact", [0.0, 0.0], 2.0).as_dict()["order"] == "exact"


def test_study_needs_three_levels(smooth_scenario) -> None:
    with pytest.raises(ValueError):
        convergence_study(smooth_scenario, levels=2)


@pytest.mark.slow
def test_smooth_refinement_orders() -> None:
    scenario = build_scenario(raster={"nt": 9, "nr": 9})
    study = convergence_study(scenario, levels=3)
    assert set(study.families) == {
        "constraints",
        "picard_fields",
        "residuals",
        "dual_solver",
        "jacobian",
        "euler",
        "euler_raster",
    }
    assert study.spacings[0] == pytest.approx(2.0 * study.spacings[1])
    picard = study.families["picard_fields"].order
    assert picard is not None and abs(picard - 2.0) <= 0.3
    dual = study.families["dual_solver"].order
    assert dual is not None and dual >= 1.7
    residuals = study.families["residuals"]
    assert residuals.passed, residuals.as_dict()
    jacobian = study.families["jacobian"].norms
    assert 3.0 <= jacobian[-2] / jacobian[-1] <= 5.0
    raster = study.families["euler_raster"]
    assert raster.passed, raster.as_dict()
    assert study.families["euler"].passed


def test_study_without_raster_has_no_raster_family(smooth_scenario) -> None:
    study = convergence_study(smooth_scenario, levels=3)
    assert "euler_raster" not in study.families
