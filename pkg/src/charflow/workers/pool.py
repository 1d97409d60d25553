"""Ordered fan-out over a bounded thread pool.

numpy releases the GIL inside its kernels, so row/column chunks and
independent solves overlap well on threads. Results always come back in
submission order, which keeps every assembled array independent of the
worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_ENV_THREADS = "CHARFLOW_THREADS"


def default_threads() -> int:
    raw = os.getenv(_ENV_THREADS, "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            LOGGER.warning("Ignoring invalid %s=%r", _ENV_THREADS, raw)
        else:
            if value >= 1:
                return value
    return 1


def resolve_threads(requested: Optional[int]) -> int:
    if requested is None:
        return default_threads()
    return max(1, int(requested))


def map_ordered(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Apply ``fn`` to ``items`` and return results in input order.

    The first exception raised by any item is re-raised after all submitted
    work has finished.
    """

    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [future.result() for future in futures]


def chunk_bounds(length: int, chunks: int) -> List[Tuple[int, int]]:
    """Split ``range(length)`` into at most ``chunks`` contiguous half-open spans."""
    chunks = max(1, min(chunks, length))
    edges = np.linspace(0, length, chunks + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_chunks(
    fn: Callable[[slice], np.ndarray],
    length: int,
    axis: int,
    threads: int = 1,
) -> np.ndarray:
    """Evaluate ``fn`` on slices of ``range(length)`` and join along ``axis``."""
    spans: Iterable[Tuple[int, int]] = chunk_bounds(length, threads)
    parts = map_ordered(lambda span: fn(slice(*span)), list(spans), threads)
    if len(parts) == 1:
        return parts[0]
    return np.concatenate(parts, axis=axis)


__all__ = ["default_threads", "resolve_threads", "map_ordered", "chunk_bounds", "map_chunks"]
