"""Order-preserving parallel map used by the experiment drivers."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "RANKCHOICE_WORKERS"


def worker_count(workers: int | None = None) -> int:
    """Explicit count, else ``$RANKCHOICE_WORKERS``, else 1 (run inline)."""
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, workers)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, fanned out to processes when more than one worker is asked for.

    Results come back in input order whatever the completion order, so
    output is identical for any worker count.
    """
    items = list(items)
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * n))))
