"""Fluid states, Riemann invariants, characteristic speeds and the source term."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np

from charflow.errors import DomainError
from charflow.physics.eos import ArrayLike, EosModel


class GeometryMode(str, Enum):
    SPHERICAL = "spherical"
    PLANE = "plane"


@dataclass(frozen=True, slots=True)
class Geometry:
    """Flow symmetry; plane mode switches the geometric source off."""

    mode: GeometryMode = GeometryMode.SPHERICAL

    @property
    def spherical(self) -> bool:
        return self.mode is GeometryMode.SPHERICAL

    @classmethod
    def parse(cls, value: Union[str, GeometryMode]) -> "Geometry":
        try:
            return cls(GeometryMode(str(value).lower()))
        except ValueError as exc:
            raise DomainError(f"unknown geometry mode {value!r}") from exc


SPHERICAL = Geometry(GeometryMode.SPHERICAL)
PLANE = Geometry(GeometryMode.PLANE)


@dataclass(frozen=True, slots=True)
class FluidState:
    rho: ArrayLike
    w: ArrayLike


@dataclass(frozen=True, slots=True)
class CharState:
    """Riemann invariants ``alpha`` (along C+) and ``beta`` (along C-)."""

    alpha: ArrayLike
    beta: ArrayLike

    @property
    def chi(self) -> ArrayLike:
        return self.alpha - self.beta

    @property
    def chi_dagger(self) -> ArrayLike:
        return self.alpha + self.beta


@dataclass(frozen=True, slots=True)
class SpeedGradients:
    """Partial derivatives of ``c+`` and ``c-`` with respect to ``alpha`` and ``beta``."""

    cplus_alpha: ArrayLike
    cplus_beta: ArrayLike
    cminus_alpha: ArrayLike
    cminus_beta: ArrayLike


def to_invariants(state: FluidState, eos: EosModel) -> CharState:
    chi_dagger = eos.chi_dagger_of_rho(state.rho)
    return CharState(alpha=0.5 * chi_dagger + state.w, beta=0.5 * chi_dagger - state.w)


def from_invariants(char: CharState, eos: EosModel) -> FluidState:
    rho = eos.rho_of_chi_dagger(char.chi_dagger)
    return FluidState(rho=rho, w=0.5 * char.chi)


def char_speeds(char: CharState, eos: EosModel) -> Tuple[ArrayLike, ArrayLike]:
    """Return ``(c+, c-) = (w + eta, w - eta)``."""
    eta = eos.eta_of_chi_dagger(char.chi_dagger)
    w = 0.5 * char.chi
    return w + eta, w - eta


def source_F(char: CharState, r: ArrayLike, geometry: Geometry, eos: EosModel) -> ArrayLike:
    """Geometric source ``F = -eta (alpha - beta) / r``; zero in plane mode."""
    radius = np.asarray(r, dtype=float)
    if np.any(radius <= 0.0):
        raise DomainError(f"source term needs r > 0, got r={float(np.min(radius)):.6g}")
    eta = eos.eta_of_chi_dagger(char.chi_dagger)
    if not geometry.spherical:
        return 0.0 * eta * radius
    return -eta * char.chi / r


def speed_gradients(char: CharState, eos: EosModel) -> SpeedGradients:
    slope = eos.eta_prime(char.chi_dagger)
    return SpeedGradients(
        cplus_alpha=0.5 + slope,
        cplus_beta=-0.5 + slope,
        cminus_alpha=0.5 - slope,
        cminus_beta=-0.5 - slope,
    )


def source_partials(
    char: CharState, r: ArrayLike, geometry: Geometry, eos: EosModel
) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Return ``(dF/dalpha, dF/dbeta, dF/dr)``."""
    eta, slope = eos.eta_and_slope(char.chi_dagger)
    chi = char.chi
    if not geometry.spherical:
        zero = 0.0 * eta * np.asarray(r, dtype=float)
        return zero, zero, zero
    return -(slope * chi + eta) / r, -(slope * chi - eta) / r, eta * chi / r**2


def gauge_shift(eos_from: EosModel, eos_to: EosModel) -> float:
    """Common offset added to ``alpha`` and ``beta`` when moving between reference densities."""
    rho_common = max(eos_from.rho_min, eos_to.rho_min)
    return 0.5 * float(eos_to.chi_dagger_of_rho(rho_common) - eos_from.chi_dagger_of_rho(rho_common))


def regauge(char: CharState, eos_from: EosModel, eos_to: EosModel) -> CharState:
    """Express ``char`` in the ``chi_dagger`` gauge of ``eos_to``.

    Both models must describe the same pressure law and differ only in
    ``rho_ref``; ``alpha - beta`` is unchanged.
    """
    shift = gauge_shift(eos_from, eos_to)
    return CharState(alpha=char.alpha + shift, beta=char.beta + shift)


__all__ = [
    "GeometryMode",
    "Geometry",
    "SPHERICAL",
    "PLANE",
    "FluidState",
    "CharState",
    "SpeedGradients",
    "to_invariants",
    "from_invariants",
    "char_speeds",
    "source_F",
    "speed_gradients",
    "source_partials",
    "gauge_shift",
    "regauge",
]
