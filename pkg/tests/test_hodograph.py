"""Hodograph map into the t-r plane."""

from __future__ import annotations

import dataclasses
import unittest

import numpy as np
import pytest

from charflow.errors import EmptyDomain
from charflow.solver.hodograph import (
    RasterSpec,
    invert_bilinear,
    jacobian_field,
    to_physical,
    validity_mask,
    winding_number,
)
from charflow.stages import solve_scenario
from conftest import STATIC, build_scenario

SQUARE_T = np.array([0.0, 1.0, 1.0, 0.0])
SQUARE_R = np.array([0.0, 0.0, 1.0, 1.0])


class StaticHodographTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        scenario = build_scenario(
            eos=STATIC["eos"], data=STATIC["data"], grid={"nu": 8, "nv": 16}, raster={"nt": 9, "nr": 9}
        )
        cls.solution = solve_scenario(scenario)

    def test_jacobian_is_two_everywhere(self) -> None:
        grid = self.solution.grid
        jac = jacobian_field(grid, self.solution.characteristics.eos)
        np.testing.assert_allclose(jac.det_analytic, 2.0, atol=1e-10)
        self.assertLess(jac.mismatch(grid.valid), 1e-10)

    def test_physical_state_is_at_rest(self) -> None:
        physical = self.solution.physical
        self.assertEqual(physical.valid_count, physical.valid.size)
        np.testing.assert_allclose(physical.rho, 1.0, atol=1e-12)
        np.testing.assert_allclose(physical.w, 0.0, atol=1e-12)
        np.testing.assert_allclose(physical.p, 0.5, atol=1e-12)
        self.assertEqual(physical.node("rho").shape, self.solution.grid.shape)

    def test_raster_covers_the_image_only(self) -> None:
        raster = self.solution.physical.raster
        self.assertIsNotNone(raster)
        self.assertTrue(raster.valid.any())
        # the image is a tilted rectangle, so the bounding box corners stay empty
        self.assertFalse(raster.valid.all())
        np.testing.assert_allclose(raster.rho[raster.valid], 1.0, atol=1e-12)
        self.assertTrue(np.isnan(raster.rho[~raster.valid]).all())


def test_winding_number_inside_outside_and_edge() -> None:
    px = np.array([0.5, 2.0, 1.0])
    py = np.array([0.5, 2.0, 0.5])
    assert winding_number(SQUARE_T, SQUARE_R, px, py).tolist() == [1, 0, 1]


def test_invert_bilinear_on_a_parallelogram() -> None:
    xs = np.array([0.0, 2.0, 3.0, 1.0])
    ys = np.array([0.0, 0.0, 1.0, 1.0])
    s, q = invert_bilinear(xs, ys, np.array([1.0]), np.array([0.5]))
    assert s[0] == pytest.approx(0.25)
    assert q[0] == pytest.approx(0.5)


def test_raster_spec_needs_two_points() -> None:
    with pytest.raises(ValueError):
        RasterSpec(nt=1, nr=5)


def test_degenerate_node_masks_its_future_quadrant(static_scenario) -> None:
    solution = solve_scenario(static_scenario, with_physical=False)
    nu = solution.grid.nu.copy()
    nu[2, 3] = 0.0
    mask = validity_mask(dataclasses.replace(solution.grid, nu=nu))
    expected = np.ones_like(mask)
    expected[2:, 3:] = False
    np.testing.assert_array_equal(mask, expected)


def test_degenerate_corner_empties_the_domain(static_scenario) -> None:
    solution = solve_scenario(static_scenario, with_physical=False)
    mu = solution.grid.mu.copy()
    mu[0, 0] = -1.0
    broken = dataclasses.replace(solution.grid, mu=mu)
    with pytest.raises(EmptyDomain):
        to_physical(broken, solution.characteristics.eos)


def test_physical_fields_do_not_depend_on_reference_density() -> None:
    plain = solve_scenario(build_scenario())
    shifted_data = {
        "beta_plus": {"kind": "sine", "base": 0.0, "amplitude": 0.1, "frequency": 1.0},
        "alpha_minus": {"kind": "linear", "base": 0.0, "slope": 0.1},
    }
    shifted = solve_scenario(build_scenario(eos={"rho_ref": 1.0}, data=shifted_data))

    np.testing.assert_allclose(shifted.grid.alpha, plain.grid.alpha - 2.0, atol=1e-10)
    for name in ("rho", "w", "t", "r"):
        np.testing.assert_allclose(getattr(shifted.physical, name), getattr(plain.physical, name), atol=1e-10)


@pytest.mark.slow
def test_jacobian_mismatch_is_second_order() -> None:
    base = build_scenario(grid={"nu": 8, "nv": 16})
    mismatches = []
    for level in range(3):
        solution = solve_scenario(base.refined(level), with_physical=False)
        grid = solution.grid
        mismatches.append(jacobian_field(grid, solution.characteristics.eos).mismatch(grid.valid))
    assert 3.0 <= mismatches[-2] / mismatches[-1] <= 5.0
