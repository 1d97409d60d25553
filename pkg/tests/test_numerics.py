"""Finite-difference and quadrature helpers."""

from __future__ import annotations

import numpy as np
import pytest

from charflow.solver.numerics import cumtrapz, grad, grad_past_edge, sample_derivative


def test_grad_past_edge_ignores_the_first_line() -> None:
    x = np.linspace(0.0, 1.0, 9)
    field = np.tile((x**2)[:, None], (1, 3))
    field[0, :] += 0.5
    out = grad_past_edge(field, x[1] - x[0], 0)
    np.testing.assert_allclose(out, np.tile((2.0 * x)[:, None], (1, 3)), atol=1e-12)
    # the plain stencil mixes the shifted line in
    assert abs(grad(field, x[1] - x[0], 0)[1, 0] - 2.0 * x[1]) > 1.0


def test_grad_past_edge_along_the_second_axis() -> None:
    v = np.linspace(0.0, 2.0, 11)
    field = np.tile(3.0 * v[None, :], (4, 1))
    field[:, 0] = -7.0
    np.testing.assert_allclose(grad_past_edge(field, v[1] - v[0], 1), 3.0, atol=1e-12)


def test_grad_past_edge_falls_back_on_short_axes() -> None:
    field = np.array([[0.0], [1.0], [4.0]])
    np.testing.assert_array_equal(grad_past_edge(field, 1.0, 0), grad(field, 1.0, 0))


def test_sample_derivative_is_exact_for_quartics() -> None:
    x = np.linspace(0.0, 1.0, 12)
    np.testing.assert_allclose(sample_derivative(x**4, x[1] - x[0]), 4.0 * x**3, atol=1e-10)


def test_cumtrapz_starts_at_zero() -> None:
    values = np.ones((3, 5))
    out = cumtrapz(values, 0.25, axis=1)
    assert out[:, 0] == pytest.approx([0.0, 0.0, 0.0])
    assert out[0, -1] == pytest.approx(1.0)
