from __future__ import annotations

import threading

import numpy as np
import pytest

from charflow.workers.pool import chunk_bounds, default_threads, map_chunks, map_ordered, resolve_threads


def test_map_ordered_keeps_input_order() -> None:
    assert map_ordered(lambda x: x * x, list(range(10)), threads=4) == [x * x for x in range(10)]


def test_single_thread_runs_inline() -> None:
    seen = set()

    def record(_: int) -> None:
        seen.add(threading.get_ident())

    map_ordered(record, list(range(16)), threads=1)
    assert seen == {threading.get_ident()}


def test_map_ordered_reraises() -> None:
    def explode(x: int) -> int:
        if x == 3:
            raise KeyError(x)
        return x

    with pytest.raises(KeyError):
        map_ordered(explode, list(range(6)), threads=3)


def test_chunk_bounds_cover_the_range() -> None:
    assert chunk_bounds(10, 3) == [(0, 3), (3, 7), (7, 10)]
    assert chunk_bounds(2, 8) == [(0, 1), (1, 2)]
    assert chunk_bounds(5, 1) == [(0, 5)]


@pytest.mark.parametrize("axis", [0, 1])
def test_map_chunks_matches_serial(axis: int) -> None:
    data = np.arange(42.0).reshape(6, 7)
    length = data.shape[axis]

    def double(span: slice) -> np.ndarray:
        return 2.0 * (data[span] if axis == 0 else data[:, span])

    np.testing.assert_array_equal(map_chunks(double, length, axis, threads=4), 2.0 * data)


def test_thread_defaults(monkeypatch) -> None:
    monkeypatch.delenv("CHARFLOW_THREADS", raising=False)
    assert default_threads() == 1
    monkeypatch.setenv("CHARFLOW_THREADS", "6")
    assert resolve_threads(None) == 6
    assert resolve_threads(0) == 1
    monkeypatch.setenv("CHARFLOW_THREADS", "many")
    assert default_threads() == 1
