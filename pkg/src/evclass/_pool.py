"""Process pool for independent games, capped by ``EVCLASS_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Optional, Sequence

ENV_VAR = "EVCLASS_THREADS"


def worker_count(requested: Optional[int] = None) -> int:
    """Pool size: ``requested`` (default: CPU count) capped by the env var."""
    n = (os.cpu_count() or 1) if requested is None else int(requested)
    cap = os.environ.get(ENV_VAR)
    if cap is not None and cap.strip():
        try:
            cap_n = int(cap)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {cap!r}") from None
        if cap_n < 1:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {cap!r}")
        n = min(n, cap_n)
    return max(1, n)


def parallel_map(fn: Callable, items: Sequence, workers: Optional[int] = None) -> list:
    """``[fn(i) for i in items]``, possibly across processes; order is preserved."""
    items = list(items)
    n = worker_count(workers)
    if n <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    chunk = max(1, len(items) // (4 * n))
    with ProcessPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=chunk))
