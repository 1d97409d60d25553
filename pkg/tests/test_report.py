"""CSV, plot-data and manifest writer tests."""

from __future__ import annotations

import json
import math
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from charflow.report.csv_writer import (
    format_value,
    read_field,
    write_characteristic_data,
    write_grid_fields,
    write_physical,
)
from charflow.report.manifest import Manifest, dumps, jsonable, load_manifest, write_run_info
from charflow.report.plot_data import plot_block, write_plot_data
from charflow.stages import solve_scenario
from conftest import build_scenario


class ReportWriterTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.solution = solve_scenario(build_scenario())

    def test_grid_fields_round_trip_exactly(self) -> None:
        grid = self.solution.grid
        with TemporaryDirectory() as tmp:
            paths = write_grid_fields(grid, Path(tmp), names=("alpha", "mu"))
            self.assertEqual([path.name for path in paths], ["field_alpha.csv", "field_mu.csv"])
            np.testing.assert_array_equal(read_field(paths[0]), grid.alpha)
            np.testing.assert_array_equal(read_field(paths[1]), grid.mu)

    def test_characteristic_data_lists_both_sides(self) -> None:
        chars = self.solution.characteristics
        with TemporaryDirectory() as tmp:
            path = write_characteristic_data(chars.raw_cp, chars.raw_cm, Path(tmp))
            lines = path.read_text(encoding="utf-8").splitlines()
        sides = [line.split(",", 1)[0] for line in lines[1:]]
        self.assertEqual(sides.count("cplus"), chars.raw_cp.n)
        self.assertEqual(sides.count("cminus"), chars.raw_cm.n)

    def test_physical_rows_match_nodes(self) -> None:
        physical = self.solution.physical
        with TemporaryDirectory() as tmp:
            path = write_physical(physical, Path(tmp))
            lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "t,r,rho,w,p,valid")
        self.assertEqual(len(lines) - 1, physical.valid.size)
        self.assertTrue(lines[1].endswith(",1"))

    def test_plot_blocks_one_per_u_line(self) -> None:
        grid = self.solution.grid
        text = plot_block(grid, "alpha")
        self.assertEqual(text.count("# u="), grid.shape[0])
        first = text.splitlines()[1].split()
        self.assertEqual(len(first), 3)
        self.assertEqual(float(first[2]), float(grid.alpha[0, 0]))
        with TemporaryDirectory() as tmp:
            paths = write_plot_data(grid, Path(tmp))
            self.assertEqual(len(paths), 4)


class FormattingTests(unittest.TestCase):
    def test_format_value(self) -> None:
        self.assertEqual(format_value(True), "1")
        self.assertEqual(format_value(np.bool_(False)), "0")
        self.assertEqual(format_value(np.int64(7)), "7")
        self.assertEqual(format_value(np.float64(0.1)), "0.1")

    def test_jsonable_maps_numpy_and_non_finite(self) -> None:
        payload = jsonable({"a": np.float64(1.5), "b": np.array([1, 2]), "c": math.nan, "d": Path("x")})
        self.assertEqual(payload, {"a": 1.5, "b": [1, 2], "c": None, "d": "x"})

    def test_dumps_is_sorted_with_trailing_newline(self) -> None:
        text = dumps({"b": 1, "a": 2})
        self.assertTrue(text.endswith("\n"))
        self.assertLess(text.index('"a"'), text.index('"b"'))


class ManifestTests(unittest.TestCase):
    def test_manifest_sections_and_run_info(self) -> None:
        manifest = Manifest(command="solve", scenario={"name": "smooth"})
        manifest.add("grid", {"nu": 4})
        manifest.exit_code = 2
        with TemporaryDirectory() as tmp:
            path = manifest.write(Path(tmp))
            loaded = load_manifest(path)
            info = json.loads(write_run_info(Path(tmp), command="solve", log_file=None, threads=2).read_text())
        self.assertEqual(loaded["grid"], {"nu": 4})
        self.assertEqual(loaded["exit_code"], 2)
        self.assertIn("version", loaded)
        self.assertEqual(info["threads"], 2)
        self.assertIsNone(info["log_file"])
        self.assertIn("generated", info)


if __name__ == "__main__":
    unittest.main()
