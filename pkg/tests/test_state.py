"""Invariant maps, characteristic speeds and the geometric source."""

from __future__ import annotations

import numpy as np
import pytest

from charflow.errors import DomainError
from charflow.physics.eos import PolytropicEos
from charflow.physics.state import (
    PLANE,
    SPHERICAL,
    CharState,
    FluidState,
    Geometry,
    GeometryMode,
    char_speeds,
    from_invariants,
    gauge_shift,
    regauge,
    source_F,
    source_partials,
    speed_gradients,
    to_invariants,
)

EOS = PolytropicEos(gamma=2.0, kappa=0.5)


def test_static_state_invariants() -> None:
    char = to_invariants(FluidState(rho=1.0, w=0.0), EOS)
    assert char.alpha == pytest.approx(2.0)
    assert char.beta == pytest.approx(2.0)
    assert char_speeds(char, EOS) == pytest.approx((1.0, -1.0))


def test_round_trip_with_velocity() -> None:
    state = FluidState(rho=np.array([0.5, 1.0, 2.0]), w=np.array([-0.3, 0.0, 0.4]))
    back = from_invariants(to_invariants(state, EOS), EOS)
    assert np.allclose(back.rho, state.rho, rtol=1e-13)
    assert np.allclose(back.w, state.w, atol=1e-14)


def test_source_vanishes_without_chi_or_in_plane_mode() -> None:
    assert source_F(CharState(2.0, 2.0), 1.0, SPHERICAL, EOS) == pytest.approx(0.0)
    assert source_F(CharState(2.2, 1.8), 1.0, PLANE, EOS) == pytest.approx(0.0)


def test_source_value_and_partials() -> None:
    char = CharState(alpha=2.2, beta=1.8)
    r = 2.0
    eta = EOS.eta_of_chi_dagger(4.0)
    assert source_F(char, r, SPHERICAL, EOS) == pytest.approx(-eta * 0.4 / r)

    h = 1e-6
    d_alpha, d_beta, d_r = source_partials(char, r, SPHERICAL, EOS)
    numeric_alpha = (
        source_F(CharState(2.2 + h, 1.8), r, SPHERICAL, EOS) - source_F(CharState(2.2 - h, 1.8), r, SPHERICAL, EOS)
    ) / (2 * h)
    numeric_r = (source_F(char, r + h, SPHERICAL, EOS) - source_F(char, r - h, SPHERICAL, EOS)) / (2 * h)
    assert d_alpha == pytest.approx(numeric_alpha, rel=1e-6)
    assert d_r == pytest.approx(numeric_r, rel=1e-6)
    assert np.isfinite(d_beta)


def test_source_rejects_non_positive_radius() -> None:
    with pytest.raises(DomainError):
        source_F(CharState(2.2, 1.8), 0.0, SPHERICAL, EOS)


def test_regauge_keeps_the_physical_state() -> None:
    shifted = PolytropicEos(gamma=2.0, kappa=0.5, rho_ref=1.0)
    assert gauge_shift(EOS, shifted) == pytest.approx(-2.0)
    moved = regauge(CharState(2.1, 1.9), EOS, shifted)
    assert moved.alpha - moved.beta == pytest.approx(0.2)
    original = from_invariants(CharState(2.1, 1.9), EOS)
    regauged = from_invariants(moved, shifted)
    assert regauged.rho == pytest.approx(original.rho, rel=1e-12)
    assert regauged.w == pytest.approx(original.w, abs=1e-12)


@pytest.mark.parametrize("raw", ["spherical", "PLANE"])
def test_geometry_parse(raw: str) -> None:
    assert Geometry.parse(raw).mode is GeometryMode(raw.lower())


def test_geometry_parse_rejects_unknown() -> None:
    with pytest.raises(DomainError):
        Geometry.parse("cylindrical")


def test_speed_gradients_match_finite_differences() -> None:
    char = CharState(2.2, 1.7)
    grads = speed_gradients(char, EOS)
    step = 1e-6
    plus_a, minus_a = char_speeds(CharState(char.alpha + step, char.beta), EOS)
    less_a, lower_a = char_speeds(CharState(char.alpha - step, char.beta), EOS)
    plus_b, minus_b = char_speeds(CharState(char.alpha, char.beta + step), EOS)
    less_b, lower_b = char_speeds(CharState(char.alpha, char.beta - step), EOS)
    assert grads.cplus_alpha == pytest.approx((plus_a - less_a) / (2 * step), abs=1e-7)
    assert grads.cminus_alpha == pytest.approx((minus_a - lower_a) / (2 * step), abs=1e-7)
    assert grads.cplus_beta == pytest.approx((plus_b - less_b) / (2 * step), abs=1e-7)
    assert grads.cminus_beta == pytest.approx((minus_b - lower_b) / (2 * step), abs=1e-7)


def test_source_is_odd_in_velocity() -> None:
    rng = np.random.default_rng(3)
    rho = rng.uniform(0.2, 5.0, 50)
    w = rng.uniform(-1.0, 1.0, 50)
    r = rng.uniform(0.5, 3.0, 50)
    forward = source_F(to_invariants(FluidState(rho=rho, w=w), EOS), r, SPHERICAL, EOS)
    backward = source_F(to_invariants(FluidState(rho=rho, w=-w), EOS), r, SPHERICAL, EOS)
    np.testing.assert_allclose(backward, -forward, rtol=1e-12, atol=1e-14)


def test_speed_gap_is_twice_the_sound_speed() -> None:
    rng = np.random.default_rng(5)
    char = CharState(alpha=rng.uniform(0.5, 4.0, 100), beta=rng.uniform(0.5, 4.0, 100))
    c_plus, c_minus = char_speeds(char, EOS)
    eta = EOS.eta_of_chi_dagger(char.alpha + char.beta)
    np.testing.assert_allclose(c_plus - c_minus, 2.0 * eta, rtol=1e-13)
