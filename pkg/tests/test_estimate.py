"""Strip-width estimate from the smallness conditions."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from charflow.errors import InvalidL
from charflow.physics.state import PLANE
from charflow.solver.estimate import box_suprema, estimate_strip_width
from charflow.stages import choose_segments, solve_characteristics, strip_estimate


@pytest.fixture()
def smooth_estimate(smooth_scenario):
    chars = solve_characteristics(smooth_scenario)
    return estimate_strip_width(chars.cp, chars.cm, chars.eos, chars.geometry, 2.0, u_star=0.25, v_star=0.5)


def test_rejects_l_not_above_one(smooth_scenario) -> None:
    chars = solve_characteristics(smooth_scenario)
    with pytest.raises(InvalidL):
        estimate_strip_width(chars.cp, chars.cm, chars.eos, chars.geometry, 1.0)


def test_recommended_widths_are_positive_and_capped(smooth_estimate) -> None:
    assert 0.0 < smooth_estimate.h_rec <= smooth_estimate.u_star
    assert 0.0 < smooth_estimate.eps_rec <= smooth_estimate.v_star
    assert smooth_estimate.binding_h in smooth_estimate.h_bounds
    assert smooth_estimate.binding_eps in smooth_estimate.eps_bounds
    assert smooth_estimate.A == pytest.approx(2.0 * smooth_estimate.a0)


def test_comparison_functions_start_at_identity(smooth_estimate) -> None:
    f1, f2, f3, f4 = smooth_estimate.fbar(np.array([0.0]))
    assert (f1[0], f2[0], f3[0], f4[0]) == (1.0, 0.0, 1.0, 0.0)


def test_majorants_on_the_corner_line(smooth_estimate) -> None:
    v = np.linspace(0.0, 0.5, 33)
    F1, F2 = smooth_estimate.F1_F2(0.0, v)
    np.testing.assert_allclose(F1, 1.0)
    assert F2[0] == pytest.approx(smooth_estimate.m0)
    assert np.all(np.diff(F2) >= 0.0)


def test_recommended_segments(smooth_estimate) -> None:
    wide = dataclasses.replace(smooth_estimate, eps_rec=1.0, v_star=0.5)
    assert wide.recommended_segments(64) == 1
    narrow = dataclasses.replace(smooth_estimate, eps_rec=0.1, v_star=1.0)
    assert narrow.recommended_segments(64) == 10
    assert narrow.recommended_segments(16) == 4


def test_summary_is_flat_enough_for_the_manifest(smooth_estimate) -> None:
    summary = smooth_estimate.summary()
    assert {"h_rec", "eps_rec", "binding_h", "binding_eps", "box"} <= set(summary)
    assert summary["box"]["states"] > 0


def test_plane_mode_has_no_source() -> None:
    from charflow.physics.eos import PolytropicEos

    eos = PolytropicEos(gamma=2.0, kappa=0.5, rho_min=0.25, rho_max=4.0)
    box = box_suprema((-2.5, 2.5), (-2.5, 2.5), 0.5, 2.0, 2.0, 0.2, eos, PLANE)
    assert box.F_bar == 0.0
    assert box.F_r == 0.0
    assert box.states > 0


def test_static_data_do_not_constrain_the_strip(static_scenario) -> None:
    chars = solve_characteristics(static_scenario)
    estimate = estimate_strip_width(chars.cp, chars.cm, chars.eos, chars.geometry, 2.0, u_star=0.5, v_star=1.0)
    assert estimate.box.F_bar == 0.0
    assert estimate.G == 0.0
    assert estimate.h_rec == pytest.approx(0.5, rel=1e-9)
    assert estimate.eps_rec == pytest.approx(1.0, rel=1e-9)
    assert estimate.floored == []
    assert estimate.recommended_segments(32) == 1


def test_static_scenario_picks_a_single_segment(static_scenario) -> None:
    auto = dataclasses.replace(static_scenario, solver=dataclasses.replace(static_scenario.solver, segments=0))
    chars = solve_characteristics(auto)
    assert choose_segments(auto, strip_estimate(chars, auto)) == 1


def test_doubling_l_never_shrinks_the_box(smooth_scenario) -> None:
    chars = solve_characteristics(smooth_scenario)
    narrow = estimate_strip_width(chars.cp, chars.cm, chars.eos, chars.geometry, 2.0, u_star=0.25, v_star=0.5)
    wide = estimate_strip_width(chars.cp, chars.cm, chars.eos, chars.geometry, 4.0, u_star=0.25, v_star=0.5)
    assert wide.A >= narrow.A and wide.B >= narrow.B and wide.D >= narrow.D


def test_box_follows_the_data_range(smooth_estimate) -> None:
    box = smooth_estimate.box
    assert -smooth_estimate.A <= box.alpha_low <= box.alpha_high <= smooth_estimate.A
    assert -smooth_estimate.B <= box.beta_low <= box.beta_high <= smooth_estimate.B
