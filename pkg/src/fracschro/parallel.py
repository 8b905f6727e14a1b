"""Deterministic map over independent work items.

FRACSCHRO_THREADS caps the worker count (default 1 = serial).  Results are
collected into index-ordered slots, so reductions do not depend on
completion order and outputs stay bit-identical at any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    try:
        n = int(os.environ.get("FRACSCHRO_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def thread_map(fn, items):
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    out = [None] * len(items)
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        futures = {pool.submit(fn, it): i for i, it in enumerate(items)}
        for fut, i in futures.items():
            out[i] = fut.result()
    return out
