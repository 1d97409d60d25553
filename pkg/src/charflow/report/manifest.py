"""JSON manifest and run-info writers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from charflow import __version__
from charflow.fs.exports import safe_write_text

MANIFEST_NAME = "manifest.json"
RUN_INFO_NAME = "run_info.json"


def jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays; non-finite floats become ``None``."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n"


@dataclass(slots=True)
class Manifest:
    """Accumulates the sections of one run's manifest."""

    command: str
    scenario: Dict[str, Any]
    sections: Dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0

    def add(self, name: str, payload: Any) -> None:
        self.sections[name] = payload

    def as_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "command": self.command,
            "version": __version__,
            "scenario": self.scenario,
            "exit_code": self.exit_code,
        }
        payload.update(self.sections)
        return payload

    def write(self, out_dir: Path) -> Path:
        return safe_write_text(out_dir / MANIFEST_NAME, dumps(self.as_dict()))


def write_run_info(out_dir: Path, *, command: str, log_file: Optional[Path], threads: int) -> Path:
    payload = {
        "command": command,
        "generated": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "log_file": log_file,
        "threads": threads,
        "version": __version__,
    }
    return safe_write_text(out_dir / RUN_INFO_NAME, dumps(payload))


def load_manifest(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


__all__ = ["MANIFEST_NAME", "RUN_INFO_NAME", "Manifest", "jsonable", "dumps", "write_run_info", "load_manifest"]
