"""Order-preserving parallel map capped by MEANFIELD_THREADS."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    raw = os.environ.get("MEANFIELD_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"MEANFIELD_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"MEANFIELD_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def pmap(fn, items):
    """[fn(x) for x in items], possibly on worker threads; results keep input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
