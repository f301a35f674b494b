"""Order-preserving worker pool for grid sweeps."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar
import os

T = TypeVar("T")
R = TypeVar("R")

THREADS_VARIABLE = "SPECTRA_THREADS"


def thread_count(default: int = 1) -> int:
    """Worker count, overridden by the ``SPECTRA_THREADS`` environment variable."""
    value = os.environ.get(THREADS_VARIABLE)
    if not value:
        return default
    try:
        count = int(value)
    except ValueError:
        raise ValueError(f"`{THREADS_VARIABLE}` must be an integer, got `{value}`")
    if count < 1:
        raise ValueError(f"`{THREADS_VARIABLE}` must be at least 1, got {count}")
    return count


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None
) -> List[R]:
    """Apply ``fn`` to every item, results in input order.

    The reduction order never depends on the number of threads.
    """
    threads = thread_count() if threads is None else threads
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))
