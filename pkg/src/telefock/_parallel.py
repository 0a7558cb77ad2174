"""Order-preserving thread map for worker-count-independent results."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, workers: int = 1) -> list:
    """Apply ``fn`` over ``items``; results come back in input order.

    Work items must be independent, so the output (and any reduction done in
    input order afterwards) is bit-identical for every worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
