"""Utility helpers for locating bundled scenarios and tables."""

from __future__ import annotations

from pathlib import Path


def _candidate_roots() -> list[Path]:
    module_root = Path(__file__).resolve().parents[2]
    return [module_root, Path.cwd()]


def _candidate_rel_paths(rel_path: Path) -> list[Path]:
    if rel_path.is_absolute():
        return [rel_path]
    candidates = [rel_path]
    if rel_path.parts and rel_path.parts[0] != "charflow":
        candidates.append(Path("charflow") / rel_path)
    return candidates


def resource_path(rel: str | Path) -> Path:
    """Return an absolute path for ``rel`` inside the repository."""
    rel_path = Path(rel)
    for root in _candidate_roots():
        for candidate in _candidate_rel_paths(rel_path):
            candidate_path = (root / candidate).resolve()
            if candidate_path.exists():
                return candidate_path
    # Fall back to best-effort join with the first root.
    return (_candidate_roots()[0] / rel_path).resolve()


def scenario_path(name: str | Path) -> Path:
    """Resolve a scenario argument: an existing path, or a bundled scenario name."""
    candidate = Path(name).expanduser()
    if candidate.exists():
        return candidate.resolve()
    stem = candidate.name if candidate.suffix == ".toml" else f"{candidate.name}.toml"
    bundled = resource_path(Path("config") / "scenarios" / stem)
    return bundled if bundled.exists() else candidate


__all__ = ["resource_path", "scenario_path"]
