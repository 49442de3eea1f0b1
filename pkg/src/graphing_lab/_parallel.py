"""Order-preserving map over worker processes.

The worker count comes from ``GRAPHING_LAB_THREADS`` (default 1).  Inputs are
fully materialised before dispatch and outputs are returned in input order,
so results never depend on the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_MIN_ITEMS_PER_WORKER = 64


def worker_count() -> int:
    raw = os.environ.get("GRAPHING_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    workers = min(worker_count(), max(1, len(items) // _MIN_ITEMS_PER_WORKER))
    if workers <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
