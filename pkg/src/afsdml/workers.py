"""Worker-pool helpers honoring the AFSD_THREADS cap (0 or unset = auto)."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor


def worker_count(requested: int | None = None) -> int:
    """Effective worker count: explicit request, else AFSD_THREADS, else the
    machine's CPU count. 0 means auto."""
    if requested is None:
        env = os.environ.get("AFSD_THREADS", "0")
        try:
            requested = int(env)
        except ValueError:
            raise ValueError(f"AFSD_THREADS must be an integer, got {env!r}") from None
    if requested < 0:
        raise ValueError(f"worker count must be >= 0, got {requested}")
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def parallel_map(fn, items, workers: int = 1, kind: str = "process") -> list:
    """Order-preserving map; sequential when workers <= 1. Tasks must be
    independent, so scheduling never changes the assembled result."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    pool_cls = ProcessPoolExecutor if kind == "process" else ThreadPoolExecutor
    with pool_cls(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
