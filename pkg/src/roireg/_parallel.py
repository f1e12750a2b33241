"""Thread-pool helper honoring the ROIREG_THREADS cap.

Work items are independent (pure functions over distinct inputs); results
are returned in submission order so reductions stay deterministic.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads() -> int:
    """Effective thread cap: min(cpu count, ROIREG_THREADS when set)."""
    n = os.cpu_count() or 1
    env = os.environ.get("ROIREG_THREADS", "").strip()
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def thread_map(fn, items):
    """Map fn over items, in parallel when it pays off; order preserved."""
    items = list(items)
    workers = min(max_threads(), len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
