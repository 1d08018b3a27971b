"""Trial-parallel execution over contiguous index ranges.

Every trial is a pure function of its index and seed, so splitting the index
range across processes changes scheduling only; callers reduce the per-range
results with sums and counts.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

from .errors import ParameterError

__all__ = ["WORKERS_ENV", "default_workers", "split_range", "map_ranges"]

WORKERS_ENV = "REGENSET_WORKERS"

T = TypeVar("T")


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ParameterError(f"{WORKERS_ENV} must be at least 1")
    return n


def split_range(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    edges = [n * i // parts for i in range(parts + 1)]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_ranges(fn: Callable[[int, int], T], n: int, workers: int | None = None) -> list[T]:
    """``[fn(a, b) for (a, b) in chunks of range(n)]``, in index order.

    ``fn`` must be picklable (a module-level function or a ``functools.partial``
    of one) when ``workers > 1``.
    """
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ParameterError("workers must be at least 1")
    if workers == 1 or n < 2:
        return [fn(0, n)] if n > 0 else []
    chunks = split_range(n, 4 * workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, a, b) for a, b in chunks]
        return [f.result() for f in futures]
