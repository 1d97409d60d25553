from __future__ import annotations

import numpy as np

from charflow.stages import solve_characteristics, solve_oracle, solve_scenario


def test_marching_reproduces_static_state(static_scenario) -> None:
    chars = solve_characteristics(static_scenario)
    spec = static_scenario.grid_spec()
    grid = solve_oracle(chars, spec)
    uu, vv = np.meshgrid(spec.u_grid(), spec.v_grid(), indexing="ij")

    np.testing.assert_allclose(grid.alpha, 2.0, atol=1e-12)
    np.testing.assert_allclose(grid.beta, 2.0, atol=1e-12)
    np.testing.assert_allclose(grid.t, uu + vv, atol=1e-12)
    np.testing.assert_allclose(grid.r, 1.0 + vv - uu, atol=1e-12)
    assert grid.valid.all()


def test_marching_agrees_with_picard_on_smooth_data(smooth_scenario) -> None:
    solution = solve_scenario(smooth_scenario, with_physical=False)
    oracle = solve_oracle(solution.characteristics, solution.spec)
    both = solution.grid.valid & oracle.valid

    assert both.all()
    for name in ("alpha", "beta", "t", "r"):
        gap = np.abs(solution.grid.field(name) - oracle.field(name))[both]
        assert float(gap.max()) < 1e-3, name


def test_marching_fills_every_node(smooth_scenario) -> None:
    chars = solve_characteristics(smooth_scenario)
    grid = solve_oracle(chars, smooth_scenario.grid_spec())
    for name in ("alpha", "beta", "t", "r"):
        assert np.isfinite(grid.field(name)).all(), name
    np.testing.assert_array_equal(grid.alpha[:, 0], chars.cm.alpha[: grid.shape[0]])
    np.testing.assert_array_equal(grid.beta[0, :], chars.cp.beta[: grid.shape[1]])
