"""
Ordered fan-out of independent work units to a thread pool
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def run_ordered(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
    progress_callback: Optional[Callable[[int, int], None]] = None
) -> List[R]:
    """
    Apply fn to every item, in parallel when workers > 1

    Results are returned in item order whatever order they complete in,
    so any reduction over them is independent of the worker count.

    Args:
        fn: Function of one work item
        items: Work items
        workers: Pool size; 1 runs inline
        progress_callback: Optional callable(completed, total)

    Returns:
        List of results aligned with items
    """
    total = len(items)
    if workers <= 1 or total <= 1:
        results = []
        for i, item in enumerate(items):
            results.append(fn(item))
            if progress_callback:
                progress_callback(i + 1, total)
        return results

    slots: List[Optional[R]] = [None] * total
    completed = 0
    with ThreadPoolExecutor(max_workers=min(workers, total)) as executor:
        future_to_index = {
            executor.submit(fn, item): i
            for i, item in enumerate(items)
        }
        for future in as_completed(future_to_index):
            index = future_to_index[future]
            try:
                slots[index] = future.result()
            except Exception as e:
                logger.error(f"Work unit {index + 1}/{total} failed: {e}")
                raise
            completed += 1
            if progress_callback:
                progress_callback(completed, total)
    return slots
