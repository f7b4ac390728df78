"""Worker-count policy and a deterministic chunked map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "CHAOSCOPE_THREADS"


def worker_count() -> int:
    """Threads allowed by CHAOSCOPE_THREADS (default: CPU count, at least 1)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV}: expected a positive integer, got {n}")
    return n


def chunked_map(fn, items, workers: int | None = None) -> list:
    """``[fn(item) for item in items]``, possibly on a thread pool; order is preserved."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
