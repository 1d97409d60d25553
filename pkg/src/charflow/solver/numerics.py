"""Shared numerical kernels: RK4 on a uniform grid, sampling and quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Type

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

Rhs = Callable[[float, np.ndarray], np.ndarray]
StopRule = Callable[[float, np.ndarray], bool]


@dataclass(slots=True)
class Rk4Run:
    """States at the accepted grid points; ``stopped`` marks an early exit."""

    states: np.ndarray
    accepted: int
    stopped: bool = False


def uniform_spacing(grid: np.ndarray, *, rtol: float = 1e-9) -> float:
    """Return the spacing of ``grid`` or raise ``ValueError`` when it is not uniform."""
    values = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("grid needs at least two points")
    steps = np.diff(values)
    spacing = float(steps.mean())
    if spacing <= 0.0 or np.max(np.abs(steps - spacing)) > rtol * max(spacing, abs(values[-1])):
        raise ValueError("grid must be uniform and increasing")
    return spacing


def rk4_grid(
    rhs: Rhs,
    grid: np.ndarray,
    y0: np.ndarray,
    *,
    stop: Optional[StopRule] = None,
    stop_on: Tuple[Type[BaseException], ...] = (),
) -> Rk4Run:
    """Classical fourth-order Runge-Kutta marching over every point of ``grid``.

    ``stop`` is evaluated on each freshly computed state; when it returns true
    the state is discarded and the run ends at the previous grid point. An
    exception whose type is listed in ``stop_on`` ends the run the same way;
    any other exception raised by ``rhs`` propagates with the failing
    parameter attached as ``exc.parameter``.
    """

    values = np.asarray(grid, dtype=float)
    states = np.empty((values.size, np.size(y0)), dtype=float)
    states[0] = y0
    for k in range(values.size - 1):
        x = values[k]
        step = values[k + 1] - x
        y = states[k]
        try:
            k1 = rhs(x, y)
            k2 = rhs(x + 0.5 * step, y + 0.5 * step * k1)
            k3 = rhs(x + 0.5 * step, y + 0.5 * step * k2)
            k4 = rhs(x + step, y + step * k3)
        except stop_on:
            return Rk4Run(states=states[: k + 1].copy(), accepted=k + 1, stopped=True)
        except Exception as exc:
            exc.parameter = float(x)  # type: ignore[attr-defined]
            raise
        candidate = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if stop is not None and stop(float(values[k + 1]), candidate):
            return Rk4Run(states=states[: k + 1].copy(), accepted=k + 1, stopped=True)
        states[k + 1] = candidate
    return Rk4Run(states=states, accepted=values.size)


def cubic_sampler(grid: np.ndarray, values: np.ndarray) -> CubicSpline:
    """Not-a-knot cubic interpolant used for half-step samples."""
    return CubicSpline(np.asarray(grid, dtype=float), np.asarray(values, dtype=float))


def sample_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """Fourth-order finite-difference derivative of uniformly sampled data."""
    f = np.asarray(values, dtype=float)
    n = f.size
    if n < 5:
        return np.gradient(f, spacing, edge_order=2) if n >= 3 else np.zeros_like(f)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * spacing)
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * spacing)
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * spacing)
    out[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * spacing)
    out[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * spacing)
    return out


def cumtrapz(values: np.ndarray, spacing: float, axis: int = -1) -> np.ndarray:
    """Running trapezoid integral starting from zero along ``axis``."""
    return cumulative_trapezoid(values, dx=spacing, axis=axis, initial=0.0)


def grad(field: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Second-order derivative along ``axis`` with one-sided second-order edges."""
    if field.shape[axis] < 3:
        return np.gradient(field, spacing, axis=axis, edge_order=1)
    return np.gradient(field, spacing, axis=axis, edge_order=2)


def grad_past_edge(field: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """``grad`` whose stencils never reach back to the first line along ``axis``.

    The first line is pinned to characteristic data and carries none of the
    trapezoid error of the lines after it, so the first two lines use
    second-order forward stencils on lines 1 to 3.
    """
    out = grad(field, spacing, axis)
    if field.shape[axis] < 4:
        return out
    f = np.moveaxis(np.asarray(field, dtype=float), axis, 0)
    edge = np.moveaxis(out, axis, 0)
    edge[0] = (-5.0 * f[1] + 8.0 * f[2] - 3.0 * f[3]) / (2.0 * spacing)
    edge[1] = (-3.0 * f[1] + 4.0 * f[2] - f[3]) / (2.0 * spacing)
    return out


def sup_norm(values: np.ndarray) -> float:
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return 0.0
    return float(np.max(np.abs(data)))


def quadrant_closure(bad: np.ndarray) -> np.ndarray:
    """Mark every node ``(i, j)`` preceded in both indices by a flagged node."""
    return np.logical_or.accumulate(np.logical_or.accumulate(bad, axis=0), axis=1)


def relative_change(new: np.ndarray, old: np.ndarray) -> float:
    """``sup|new - old| / (sup|new| + 1)``."""
    return sup_norm(new - old) / (sup_norm(new) + 1.0)


__all__ = [
    "Rk4Run",
    "uniform_spacing",
    "rk4_grid",
    "cubic_sampler",
    "sample_derivative",
    "cumtrapz",
    "grad",
    "grad_past_edge",
    "sup_norm",
    "quadrant_closure",
    "relative_change",
]
