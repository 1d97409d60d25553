"""Barotropic equations of state ``p = f(rho)`` and their Riemann-variable maps.

Every model exposes the same surface: the sound speed ``eta = sqrt(f'(rho))``,
the invariant sum ``chi_dagger`` (twice the integral of ``eta / rho``), its
inverse, and the slope ``eta' = d eta / d chi_dagger``. All operations accept
floats or numpy arrays and return the same kind they were given.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from charflow.errors import DomainError, RangeError

LOGGER = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_RANGE_SLACK = 1e-12
_GAUSS_POINTS = 24
_NEWTON_MAX_ITER = 40


class EosKind(str, Enum):
    POLYTROPIC = "polytropic"
    TABULATED = "tabulated"


class EosModel(ABC):
    """Common interface of the supported equations of state."""

    kind: EosKind
    rho_min: float
    rho_max: float
    rho_ref: float

    # --- per-model primitives -------------------------------------------

    @abstractmethod
    def _pressure(self, rho: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _eta(self, rho: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _chi(self, rho: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _rho(self, chi: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _eta_slope(self, rho: np.ndarray, eta: np.ndarray) -> np.ndarray: ...

    # --- public surface --------------------------------------------------

    @property
    def chi_range(self) -> Tuple[float, float]:
        lo, hi = self._chi(np.array([self.rho_min, self.rho_max], dtype=float))
        return float(lo), float(hi)

    def pressure(self, rho: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_rho(rho)
        return _finish(self._pressure(values), scalar)

    def eta_of_rho(self, rho: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_rho(rho)
        return _finish(self._eta(values), scalar)

    def chi_dagger_of_rho(self, rho: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_rho(rho)
        return _finish(self._chi(values), scalar)

    def rho_of_chi_dagger(self, chi_dagger: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_chi(chi_dagger)
        return _finish(self._rho(values), scalar)

    def eta_of_chi_dagger(self, chi_dagger: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_chi(chi_dagger)
        return _finish(self._eta(self._rho(values)), scalar)

    def eta_prime(self, chi_dagger: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_chi(chi_dagger)
        rho = self._rho(values)
        return _finish(self._eta_slope(rho, self._eta(rho)), scalar)

    def eta_and_slope(self, chi_dagger: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
        """Return ``(eta, eta')`` at ``chi_dagger`` with a single inversion."""
        values, scalar = self._checked_chi(chi_dagger)
        rho = self._rho(values)
        eta = self._eta(rho)
        return _finish(eta, scalar), _finish(self._eta_slope(rho, eta), scalar)

    def dlogrho_dchi(self, chi_dagger: ArrayLike) -> ArrayLike:
        """``d log(rho) / d chi_dagger``, which equals ``1 / (2 eta)``."""
        values, scalar = self._checked_chi(chi_dagger)
        return _finish(0.5 / self._eta(self._rho(values)), scalar)

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
            "rho_ref": self.rho_ref,
            "chi_range": list(self.chi_range),
        }

    # --- argument checks --------------------------------------------------

    def _checked_rho(self, rho: ArrayLike) -> Tuple[np.ndarray, bool]:
        values = np.asarray(rho, dtype=float)
        inside = (values >= self.rho_min) & (values <= self.rho_max)
        if not np.all(inside):
            bad = float(values[~inside].flat[0])
            raise DomainError(
                f"rho={bad:.6g} outside admissible domain [{self.rho_min:.6g}, {self.rho_max:.6g}]"
            )
        return values, values.ndim == 0

    def _checked_chi(self, chi_dagger: ArrayLike) -> Tuple[np.ndarray, bool]:
        values = np.asarray(chi_dagger, dtype=float)
        lo, hi = self.chi_range
        slack = _RANGE_SLACK * max(1.0, abs(lo), abs(hi))
        inside = (values >= lo - slack) & (values <= hi + slack)
        if not np.all(inside):
            bad = float(values[~inside].flat[0])
            raise RangeError(
                f"chi_dagger={bad:.6g} outside equation-of-state range [{lo:.6g}, {hi:.6g}]",
                chi_dagger=bad,
            )
        return np.clip(values, lo, hi), values.ndim == 0


@dataclass(frozen=True, slots=True)
class PolytropicEos(EosModel):
    """``p = kappa * rho**gamma`` with closed-form invariant maps."""

    gamma: float
    kappa: float
    rho_min: float = 1e-8
    rho_max: float = 1e8
    rho_ref: float = 0.0
    kind: EosKind = EosKind.POLYTROPIC

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise DomainError(f"polytropic gamma must exceed 1, got {self.gamma}")
        if not self.kappa > 0.0:
            raise DomainError(f"polytropic kappa must be positive, got {self.kappa}")
        if not 0.0 < self.rho_min < self.rho_max:
            raise DomainError(
                f"density domain must satisfy 0 < rho_min < rho_max, got [{self.rho_min}, {self.rho_max}]"
            )
        if not 0.0 <= self.rho_ref <= self.rho_max:
            raise DomainError(f"reference density {self.rho_ref} outside [0, {self.rho_max}]")

    @property
    def _scale(self) -> float:
        return math.sqrt(self.kappa * self.gamma)

    @property
    def _eta_ref(self) -> float:
        return self._scale * self.rho_ref ** (0.5 * (self.gamma - 1.0))

    def _pressure(self, rho: np.ndarray) -> np.ndarray:
        return self.kappa * rho**self.gamma

    def _eta(self, rho: np.ndarray) -> np.ndarray:
        return self._scale * rho ** (0.5 * (self.gamma - 1.0))

    def _chi(self, rho: np.ndarray) -> np.ndarray:
        return 4.0 / (self.gamma - 1.0) * (self._eta(rho) - self._eta_ref)

    def _rho(self, chi: np.ndarray) -> np.ndarray:
        eta = self._eta_ref + 0.25 * (self.gamma - 1.0) * chi
        return (eta / self._scale) ** (2.0 / (self.gamma - 1.0))

    def _eta_slope(self, rho: np.ndarray, eta: np.ndarray) -> np.ndarray:
        return np.full_like(eta, 0.25 * (self.gamma - 1.0))

    def eta_of_chi_dagger(self, chi_dagger: ArrayLike) -> ArrayLike:
        values, scalar = self._checked_chi(chi_dagger)
        return _finish(self._eta_ref + 0.25 * (self.gamma - 1.0) * values, scalar)

    def describe(self) -> dict:
        payload = super(PolytropicEos, self).describe()
        payload.update({"gamma": self.gamma, "kappa": self.kappa})
        return payload


class TabulatedEos(EosModel):
    """Monotone cubic interpolation of sampled ``(rho, p)`` pairs.

    ``chi_dagger`` is anchored on adaptive quadrature between table nodes and
    completed inside a node interval with fixed Gauss-Legendre panels. The
    inverse map uses Newton steps safeguarded by the bracketing interval.
    """

    kind = EosKind.TABULATED

    def __init__(
        self,
        rho: np.ndarray,
        p: np.ndarray,
        *,
        rho_min: Optional[float] = None,
        rho_max: Optional[float] = None,
        rho_ref: Optional[float] = None,
        source: Optional[Path] = None,
    ) -> None:
        nodes = np.asarray(rho, dtype=float).ravel()
        values = np.asarray(p, dtype=float).ravel()
        _validate_table(nodes, values)

        self.source = source
        self.table_rho = nodes
        self.table_p = values
        self.rho_min = float(nodes[0] if rho_min is None else rho_min)
        self.rho_max = float(nodes[-1] if rho_max is None else rho_max)
        if not nodes[0] <= self.rho_min < self.rho_max <= nodes[-1]:
            raise DomainError(
                f"density domain [{self.rho_min:.6g}, {self.rho_max:.6g}] not covered by table "
                f"[{nodes[0]:.6g}, {nodes[-1]:.6g}]"
            )
        self.rho_ref = float(self.rho_min if rho_ref is None else rho_ref)
        if not nodes[0] <= self.rho_ref <= nodes[-1]:
            raise DomainError(f"reference density {self.rho_ref:.6g} outside the table")

        self._spline = PchipInterpolator(nodes, values, extrapolate=False)
        self._slope = self._spline.derivative()
        self._curvature = self._spline.derivative(2)

        slopes = self._slope(nodes)
        if not np.all(slopes > 0.0):
            raise DomainError("tabulated sound speed vanishes at a table node")
        self._require_convex(nodes)

        self._gauss_x, self._gauss_w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
        panels = np.array(
            [
                quad(self._integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
                for a, b in zip(nodes[:-1], nodes[1:])
            ]
        )
        self._node_chi = np.concatenate(([0.0], np.cumsum(panels)))
        self._offset = float(self._cumulative(np.array([self.rho_ref]))[0])
        bounds = self._chi(np.array([self.rho_min, self.rho_max]))
        self._chi_bounds = (float(bounds[0]), float(bounds[1]))
        LOGGER.debug(
            "Tabulated EOS ready rows=%d rho=[%.4g, %.4g] chi=[%.6g, %.6g]",
            nodes.size,
            self.rho_min,
            self.rho_max,
            *self.chi_range,
        )

    @classmethod
    def from_csv(cls, path: Path, **kwargs: float) -> "TabulatedEos":
        """Load a two-column ``rho,p`` table; a header row is optional."""
        data = np.loadtxt(path, delimiter=",", skiprows=_header_rows(Path(path)), ndmin=2)
        if data.shape[1] < 2:
            raise DomainError(f"equation-of-state table {path} needs rho and p columns")
        return cls(data[:, 0], data[:, 1], source=Path(path), **kwargs)

    @property
    def chi_range(self) -> Tuple[float, float]:
        return self._chi_bounds

    # --- primitives ---------------------------------------------------------

    def _integrand(self, s: np.ndarray) -> np.ndarray:
        return 2.0 * np.sqrt(np.maximum(self._slope(s), 0.0)) / s

    def _cumulative(self, rho: np.ndarray) -> np.ndarray:
        """Integral of ``2 eta / rho`` from the first table node."""
        flat = rho.ravel()
        k = np.clip(np.searchsorted(self.table_rho, flat, side="right") - 1, 0, self.table_rho.size - 2)
        start = self.table_rho[k]
        half = 0.5 * (flat - start)
        mid = start + half
        samples = mid[:, None] + half[:, None] * self._gauss_x[None, :]
        partial = half * (self._integrand(samples) @ self._gauss_w)
        return (self._node_chi[k] + partial).reshape(rho.shape)

    def _pressure(self, rho: np.ndarray) -> np.ndarray:
        return self._spline(rho)

    def _eta(self, rho: np.ndarray) -> np.ndarray:
        return np.sqrt(self._slope(rho))

    def _chi(self, rho: np.ndarray) -> np.ndarray:
        return self._cumulative(rho) - self._offset

    def _rho(self, chi: np.ndarray) -> np.ndarray:
        target = (chi + self._offset).ravel()
        nodes = self.table_rho
        k = np.clip(np.searchsorted(self._node_chi, target, side="right") - 1, 0, nodes.size - 2)
        lo = nodes[k].copy()
        hi = nodes[k + 1].copy()
        guess = 0.5 * (lo + hi)
        for _ in range(_NEWTON_MAX_ITER):
            residual = self._cumulative(guess) - target
            lo = np.where(residual < 0.0, guess, lo)
            hi = np.where(residual < 0.0, hi, guess)
            step = residual * guess / (2.0 * self._eta(guess))
            candidate = guess - step
            outside = (candidate < lo) | (candidate > hi)
            candidate = np.where(outside, 0.5 * (lo + hi), candidate)
            done = np.abs(candidate - guess) <= 1e-14 * guess
            guess = candidate
            if np.all(done):
                break
        return guess.reshape(np.shape(chi))

    def _eta_slope(self, rho: np.ndarray, eta: np.ndarray) -> np.ndarray:
        return rho * self._curvature(rho) / (4.0 * eta**2)

    def _require_convex(self, nodes: np.ndarray) -> None:
        samples = np.linspace(nodes[0], nodes[-1], 8 * nodes.size)
        curvature = self._curvature(samples)
        bad = curvature <= 0.0
        if np.any(bad):
            index = int(np.argmax(bad))
            row = int(np.clip(np.searchsorted(nodes, samples[index], side="right") - 1, 0, nodes.size - 2))
            raise DomainError(
                f"interpolated pressure is not convex at sample {index} of {samples.size} "
                f"(rho={samples[index]:.6g}, table rows {row}-{row + 1}); eta' would vanish there"
            )

    def describe(self) -> dict:
        payload = super().describe()
        payload.update({"rows": int(self.table_rho.size), "source": str(self.source or "")})
        return payload


def _header_rows(path: Path) -> int:
    with path.open(encoding="utf-8") as handle:
        first = handle.readline()
    try:
        [float(cell) for cell in first.split(",") if cell.strip()]
    except ValueError:
        return 1
    return 0


def _validate_table(rho: np.ndarray, p: np.ndarray) -> None:
    if rho.size != p.size:
        raise DomainError(f"table columns differ in length ({rho.size} vs {p.size})")
    if rho.size < 4:
        raise DomainError(f"equation-of-state table needs at least 4 rows, got {rho.size}")
    if not np.all(np.isfinite(rho)) or not np.all(np.isfinite(p)):
        raise DomainError("equation-of-state table contains non-finite entries")
    if rho[0] <= 0.0 or np.any(np.diff(rho) <= 0.0):
        raise DomainError("table densities must be positive and strictly increasing")
    if np.any(np.diff(p) <= 0.0):
        raise DomainError("table pressures must be strictly increasing")
    secant = np.diff(p) / np.diff(rho)
    bends = np.diff(secant)
    if np.any(bends <= 0.0):
        row = int(np.argmax(bends <= 0.0)) + 1
        raise DomainError(f"table pressure is not strictly convex near row {row} (rho={rho[row]:.6g})")


def _finish(values: np.ndarray, scalar: bool) -> ArrayLike:
    if scalar:
        return float(values)
    return values


# Function-style aliases used throughout the solvers.


def eta_of_rho(rho: ArrayLike, eos: EosModel) -> ArrayLike:
    return eos.eta_of_rho(rho)


def chi_dagger_of_rho(rho: ArrayLike, eos: EosModel) -> ArrayLike:
    return eos.chi_dagger_of_rho(rho)


def rho_of_chi_dagger(chi_dagger: ArrayLike, eos: EosModel) -> ArrayLike:
    return eos.rho_of_chi_dagger(chi_dagger)


def eta_of_chi_dagger(chi_dagger: ArrayLike, eos: EosModel) -> ArrayLike:
    return eos.eta_of_chi_dagger(chi_dagger)


def eta_prime(chi_dagger: ArrayLike, eos: EosModel) -> ArrayLike:
    return eos.eta_prime(chi_dagger)


__all__ = [
    "ArrayLike",
    "EosKind",
    "EosModel",
    "PolytropicEos",
    "TabulatedEos",
    "eta_of_rho",
    "chi_dagger_of_rho",
    "rho_of_chi_dagger",
    "eta_of_chi_dagger",
    "eta_prime",
]
