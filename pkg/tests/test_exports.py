"""Output directories, bundled resources and log rotation."""

from __future__ import annotations

import logging.handlers
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from charflow._paths import resource_path, scenario_path
from charflow.fs.exports import resolve_out_dir, runs_dir, safe_write_text, sanitize_filename
from charflow.logs.rotating import get_logger, log_dir, log_path


class SanitizeTests(unittest.TestCase):
    def test_replaces_unsafe_characters(self) -> None:
        self.assertEqual(sanitize_filename("spherical/smooth:run"), "spherical_smooth_run")

    def test_empty_name_falls_back(self) -> None:
        self.assertEqual(sanitize_filename("   "), "charflow")

    def test_long_names_keep_extension(self) -> None:
        name = sanitize_filename("x" * 300 + ".csv")
        self.assertEqual(len(name), 120)
        self.assertTrue(name.endswith(".csv"))


class OutputDirTests(unittest.TestCase):
    def test_explicit_directory_is_created(self) -> None:
        with TemporaryDirectory() as tmp:
            target = Path(tmp) / "nested" / "out"
            self.assertEqual(resolve_out_dir(str(target), "static"), target)
            self.assertTrue(target.is_dir())

    def test_runs_dir_under_base(self) -> None:
        with TemporaryDirectory() as tmp:
            path = runs_dir("spherical smooth", Path(tmp))
            self.assertEqual(path, Path(tmp) / "spherical smooth")
            self.assertTrue(path.is_dir())

    def test_safe_write_text_creates_parents(self) -> None:
        with TemporaryDirectory() as tmp:
            path = safe_write_text(Path(tmp) / "a" / "b.txt", "ok\n")
            self.assertEqual(path.read_text(encoding="utf-8"), "ok\n")


class ResourceTests(unittest.TestCase):
    def test_bundled_scenario_by_name(self) -> None:
        path = scenario_path("plane")
        self.assertEqual(path.name, "plane.toml")
        self.assertTrue(path.exists())

    def test_resource_path_finds_tables(self) -> None:
        self.assertTrue(resource_path("config/scenarios/tables/polytrope_2.csv").exists())

    def test_unknown_name_is_returned_unresolved(self) -> None:
        self.assertEqual(scenario_path("no_such_scenario"), Path("no_such_scenario"))


class RotatingLogTests(unittest.TestCase):
    def test_single_rotating_handler_in_log_dir(self) -> None:
        logger = get_logger()
        get_logger()
        rotating = [h for h in logger.handlers if isinstance(h, logging.handlers.RotatingFileHandler)]
        self.assertEqual(len(rotating), 1)
        self.assertEqual(rotating[0].maxBytes, 1_500_000)
        self.assertEqual(rotating[0].backupCount, 5)
        self.assertEqual(Path(rotating[0].baseFilename), log_path())
        self.assertEqual(log_path().parent, log_dir())


if __name__ == "__main__":
    unittest.main()
