"""Deterministic worker-pool map.

Results are always gathered in input order, so the worker count changes
throughput but never output. Work items must be independent.
"""

from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, workers: int = 1):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
