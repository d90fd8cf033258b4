"""
Workers - Order-preserving parallel map for independent restarts.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from .config_manager import get_config

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every item, possibly on a thread pool.

    Results come back in input order, so any merge over them is independent
    of scheduling.

    Args:
        fn: Pure function of one item
        items: Inputs
        threads: Worker count (defaults to the configured / CCPNET_THREADS value)

    Returns:
        List of results in input order
    """
    work = list(items)
    workers = threads if threads is not None else get_config().resolved_threads()
    if workers <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=min(workers, len(work))) as pool:
        return list(pool.map(fn, work))
