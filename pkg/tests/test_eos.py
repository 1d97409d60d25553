"""Equation-of-state tests."""

from __future__ import annotations

import math
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from charflow.errors import DomainError, RangeError
from charflow.physics.eos import PolytropicEos, TabulatedEos

TABLE = Path(__file__).resolve().parents[1] / "charflow" / "config" / "scenarios" / "tables" / "polytrope_2.csv"


class PolytropicTests(unittest.TestCase):
    def setUp(self) -> None:
        self.eos = PolytropicEos(gamma=2.0, kappa=0.5)

    def test_unit_density_closed_forms(self) -> None:
        self.assertAlmostEqual(self.eos.pressure(1.0), 0.5)
        self.assertAlmostEqual(self.eos.eta_of_rho(1.0), 1.0)
        self.assertAlmostEqual(self.eos.chi_dagger_of_rho(1.0), 4.0)
        self.assertAlmostEqual(self.eos.rho_of_chi_dagger(4.0), 1.0)
        self.assertAlmostEqual(self.eos.eta_prime(4.0), 0.25)

    def test_round_trip_on_arrays(self) -> None:
        rho = np.linspace(0.3, 3.5, 17)
        back = self.eos.rho_of_chi_dagger(self.eos.chi_dagger_of_rho(rho))
        self.assertIsInstance(back, np.ndarray)
        self.assertLess(float(np.max(np.abs(back - rho))), 1e-13)

    def test_round_trip_on_random_densities(self) -> None:
        rng = np.random.default_rng(11)
        rho = rng.uniform(0.05, 20.0, 100)
        back = self.eos.rho_of_chi_dagger(self.eos.chi_dagger_of_rho(rho))
        np.testing.assert_allclose(back, rho, rtol=1e-12)

    def test_scalar_in_scalar_out(self) -> None:
        self.assertIsInstance(self.eos.eta_of_chi_dagger(4.0), float)

    def test_dlogrho_matches_sound_speed(self) -> None:
        self.assertAlmostEqual(self.eos.dlogrho_dchi(4.0), 0.5)

    def test_eta_slope_matches_finite_difference(self) -> None:
        step = 1e-6
        eta, slope = self.eos.eta_and_slope(3.0)
        self.assertAlmostEqual(eta, self.eos.eta_of_chi_dagger(3.0))
        central = (self.eos.eta_of_chi_dagger(3.0 + step) - self.eos.eta_of_chi_dagger(3.0 - step)) / (2 * step)
        self.assertAlmostEqual(slope, central, places=7)

    def test_reference_density_shifts_invariant_sum(self) -> None:
        shifted = PolytropicEos(gamma=2.0, kappa=0.5, rho_ref=1.0)
        self.assertAlmostEqual(shifted.chi_dagger_of_rho(1.0), 0.0)
        self.assertAlmostEqual(shifted.chi_dagger_of_rho(4.0), self.eos.chi_dagger_of_rho(4.0) - 4.0)

    def test_density_outside_domain(self) -> None:
        bounded = PolytropicEos(gamma=2.0, kappa=0.5, rho_min=0.25, rho_max=4.0)
        with self.assertRaises(DomainError):
            bounded.eta_of_rho(5.0)
        with self.assertRaises(RangeError) as caught:
            bounded.rho_of_chi_dagger(100.0)
        self.assertEqual(caught.exception.chi_dagger, 100.0)

    def test_rejects_bad_parameters(self) -> None:
        with self.assertRaises(DomainError):
            PolytropicEos(gamma=1.0, kappa=0.5)
        with self.assertRaises(DomainError):
            PolytropicEos(gamma=2.0, kappa=0.0)


class TabulatedTests(unittest.TestCase):
    def setUp(self) -> None:
        self.eos = TabulatedEos.from_csv(TABLE)

    def test_matches_sampled_polytrope(self) -> None:
        # p = rho^2 / 2 so eta = sqrt(rho) and chi_dagger differences are 4 * d(eta)
        self.assertAlmostEqual(self.eos.eta_of_rho(1.0), 1.0, places=2)
        delta = self.eos.chi_dagger_of_rho(2.0) - self.eos.chi_dagger_of_rho(1.0)
        self.assertAlmostEqual(delta, 4.0 * (math.sqrt(2.0) - 1.0), places=2)

    def test_reference_is_first_table_density(self) -> None:
        self.assertAlmostEqual(self.eos.chi_dagger_of_rho(self.eos.rho_min), 0.0, places=12)
        self.assertEqual(self.eos.chi_range[0], 0.0)

    def test_inverse_is_consistent(self) -> None:
        rho = np.array([0.3, 0.77, 1.0, 2.5, 4.9])
        back = self.eos.rho_of_chi_dagger(self.eos.chi_dagger_of_rho(rho))
        self.assertLess(float(np.max(np.abs(back - rho) / rho)), 1e-10)

    def test_header_row_is_optional(self) -> None:
        rho = np.linspace(0.5, 2.0, 8)
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "bare.csv"
            path.write_text("".join(f"{float(x)!r},{float(0.5 * x * x)!r}\n" for x in rho), encoding="utf-8")
            eos = TabulatedEos.from_csv(path)
        self.assertEqual(eos.table_rho.size, 8)

    def test_rejects_non_convex_table(self) -> None:
        rho = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        p = np.array([1.0, 3.0, 4.0, 6.0, 9.0])
        with self.assertRaises(DomainError) as caught:
            TabulatedEos(rho, p)
        self.assertIn("row", str(caught.exception))

    def test_rejects_table_whose_interpolant_bends_the_wrong_way(self) -> None:
        # secants 1, 1.1, 10, 10.5 increase, but the interpolant sags just above rho = 2
        rho = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        p = np.array([1.0, 2.0, 3.1, 13.1, 23.6])
        with self.assertRaises(DomainError) as caught:
            TabulatedEos(rho, p)
        message = str(caught.exception)
        self.assertIn("sample", message)
        self.assertIn("rows 1-2", message)

    def test_rejects_short_table(self) -> None:
        with self.assertRaises(DomainError):
            TabulatedEos(np.array([1.0, 2.0, 3.0]), np.array([1.0, 4.0, 9.0]))


if __name__ == "__main__":
    unittest.main()
