"""Ordered thread fan-out for solver lines and refinement levels."""

from .pool import map_chunks, map_ordered, resolve_threads

__all__ = ["map_chunks", "map_ordered", "resolve_threads"]
