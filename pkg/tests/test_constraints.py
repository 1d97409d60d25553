"""Constraint ODEs along the two initial characteristics."""

from __future__ import annotations

import dataclasses
import unittest

import numpy as np
import pytest

from charflow.errors import EpsilonGuardHit
from charflow.physics.eos import PolytropicEos
from charflow.physics.state import PLANE, SPHERICAL
from charflow.solver.constraints import (
    Corner,
    FreeData,
    Side,
    chi_bound_profile,
    corner_compatibility,
    solve_cminus,
    solve_cplus,
    solve_pair,
)
from charflow.verify.convergence import fit_order

EOS = PolytropicEos(gamma=2.0, kappa=0.5)
BOUNDED = PolytropicEos(gamma=2.0, kappa=0.5, rho_min=0.25, rho_max=4.0)
CORNER = Corner(alpha0=2.0, beta0=2.0, r0=1.0)


def _constant(side: Side, end: float, cells: int, value: float = 2.0) -> FreeData:
    grid = np.linspace(0.0, end, cells + 1)
    return FreeData(side=side, param_grid=grid, samples=np.full_like(grid, value), corner=CORNER)


def _smooth_plus(cells: int, end: float = 1.0) -> FreeData:
    v = np.linspace(0.0, end, cells + 1)
    return FreeData(side=Side.CPLUS, param_grid=v, samples=2.0 + 0.1 * np.sin(v), corner=CORNER)


def _smooth_minus(cells: int, end: float = 0.25) -> FreeData:
    u = np.linspace(0.0, end, cells + 1)
    return FreeData(side=Side.CMINUS, param_grid=u, samples=2.0 + 0.1 * u, corner=CORNER)


class StaticConstraintTests(unittest.TestCase):
    def test_static_data_are_exact(self) -> None:
        cp, cm = solve_pair(
            _constant(Side.CPLUS, 1.0, 32), _constant(Side.CMINUS, 0.5, 16), EOS, SPHERICAL, 1e-3
        )
        self.assertLess(float(np.max(np.abs(cp.alpha - 2.0))), 1e-14)
        self.assertLess(float(np.max(np.abs(cp.r - (1.0 + cp.param)))), 1e-13)
        self.assertLess(float(np.max(np.abs(cm.beta - 2.0))), 1e-14)
        self.assertLess(float(np.max(np.abs(cm.r - (1.0 - cm.param)))), 1e-13)
        for cd in (cp, cm):
            self.assertLess(float(np.max(np.abs(cd.mu - 1.0))), 1e-12)
            self.assertLess(float(np.max(np.abs(cd.nu - 1.0))), 1e-12)
            self.assertLess(float(np.max(np.abs(cd.gamma))), 1e-12)
            self.assertLess(float(np.max(np.abs(cd.delta))), 1e-12)
        ok, _ = corner_compatibility(cp, cm)
        self.assertTrue(ok)
        self.assertFalse(cm.truncated)

    def test_guard_truncates_inflowing_characteristic(self) -> None:
        # r = 1 - u along C-, so the 0.1 guard is reached at u = 0.9
        cm = solve_cminus(_constant(Side.CMINUS, 1.0, 40), EOS, SPHERICAL, 0.1)
        self.assertTrue(cm.truncated)
        self.assertLessEqual(abs(cm.u_bar - 0.9), 0.025 + 1e-12)
        self.assertAlmostEqual(cm.u_cross, 0.9, places=9)
        self.assertTrue(np.all(cm.r > 0.1 - 1e-12))
        with self.assertRaises(EpsilonGuardHit):
            cm.require_complete()

    def test_every_keeps_solver_spacing(self) -> None:
        cp = solve_cplus(_smooth_plus(32), BOUNDED, SPHERICAL)
        coarse = cp.every(4)
        self.assertEqual(coarse.n, 9)
        self.assertAlmostEqual(coarse.spacing, 4 * cp.spacing)
        np.testing.assert_array_equal(coarse.alpha, cp.alpha[::4])


def test_free_data_must_start_at_the_corner() -> None:
    grid = np.linspace(0.0, 1.0, 9)
    with pytest.raises(ValueError):
        FreeData(side=Side.CPLUS, param_grid=grid, samples=np.full_like(grid, 2.5), corner=CORNER)


def test_free_data_must_be_uniform() -> None:
    grid = np.array([0.0, 0.1, 0.3, 0.4])
    with pytest.raises(ValueError):
        FreeData(side=Side.CPLUS, param_grid=grid, samples=np.full_like(grid, 2.0), corner=CORNER)


def test_plane_mode_keeps_alpha_constant_on_cplus() -> None:
    cp = solve_cplus(_smooth_plus(16), BOUNDED, PLANE)
    assert np.all(cp.alpha == 2.0)


def test_chi_bound_holds_on_random_smooth_data() -> None:
    rng = np.random.default_rng(7)
    for _ in range(10):
        amplitude, frequency, phase = rng.uniform(0.02, 0.2), rng.uniform(0.5, 3.0), rng.uniform(0.0, np.pi)
        v = np.linspace(0.0, 1.0, 65)
        samples = 2.0 + amplitude * (np.sin(frequency * v + phase) - np.sin(phase))
        data = FreeData(side=Side.CPLUS, param_grid=v, samples=samples, corner=CORNER)
        cp = solve_cplus(data, BOUNDED, SPHERICAL)
        assert cp.diagnostics["chi_bound_margin"] >= -cp.diagnostics["chi_bound_tolerance"]


def test_chi_bound_is_attained_for_constant_data() -> None:
    cp = solve_cplus(_constant(Side.CPLUS, 1.0, 32), EOS, SPHERICAL)
    bound, attained = chi_bound_profile(cp)
    assert np.max(np.abs(bound - attained)) < 1e-12


def test_chi_representation_matches_solution() -> None:
    cp = solve_cplus(_smooth_plus(64), BOUNDED, SPHERICAL)
    assert cp.diagnostics["chi_representation_error"] < 1e-4


def _self_convergence(solve, base: int, levels: int, fields) -> float:
    """Order fitted to sup-norm differences of successive levels over their shared nodes."""
    runs = [solve(base * 2**k) for k in range(levels + 1)]
    diffs = []
    for coarse, fine in zip(runs[:-1], runs[1:]):
        diffs.append(
            max(float(np.max(np.abs(getattr(coarse, name) - getattr(fine, name)[::2]))) for name in fields)
        )
    return fit_order(diffs)


def test_cplus_fourth_order_self_convergence() -> None:
    order = _self_convergence(
        lambda n: solve_cplus(_smooth_plus(n), BOUNDED, SPHERICAL), 8, 4, ("alpha", "r")
    )
    assert order == pytest.approx(4.0, abs=0.5)


def test_cminus_fourth_order_self_convergence() -> None:
    order = _self_convergence(
        lambda n: solve_cminus(_smooth_minus(n, end=0.5), BOUNDED, SPHERICAL, 1e-3), 8, 4, ("beta", "r")
    )
    assert order == pytest.approx(4.0, abs=0.5)


def _static_pair():
    return solve_pair(_constant(Side.CPLUS, 1.0, 32), _constant(Side.CMINUS, 0.5, 16), EOS, SPHERICAL, 1e-3)


def test_corner_reports_a_shifted_beta_plus() -> None:
    cp, cm = _static_pair()
    shift = 1e-3
    beta = cp.beta.copy()
    beta[0] += shift
    ok, report = corner_compatibility(dataclasses.replace(cp, beta=beta), cm, eos=EOS, geometry=SPHERICAL)
    assert not ok
    assert report["beta"] == pytest.approx(shift, rel=1e-9)
    # the C- seed no longer matches the slope of the shifted samples either
    assert report["delta"] > 0.0


def test_corner_reports_a_seed_that_disagrees_with_the_opposite_data() -> None:
    cp, cm = _static_pair()
    sloped = dataclasses.replace(cm, alpha=2.0 + 0.1 * cm.param)
    ok, report = corner_compatibility(cp, sloped)
    assert not ok
    assert report["gamma"] == pytest.approx(0.1, rel=1e-9)


def test_corner_source_checks_pass_on_consistent_smooth_data() -> None:
    cp, cm = solve_pair(_smooth_plus(64), _smooth_minus(32), BOUNDED, SPHERICAL, 1e-3)
    ok, report = corner_compatibility(cp, cm, eos=BOUNDED, geometry=SPHERICAL)
    assert {"alpha_v", "beta_u"} <= set(report)
    assert ok, report
