"""Order-preserving parallel map capped by TOPOSQT_THREADS."""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "TOPOSQT_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None or not raw.strip():
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return n


def pmap(fn, items):
    """[fn(x) for x in items], possibly on a thread pool; result order is fixed."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
