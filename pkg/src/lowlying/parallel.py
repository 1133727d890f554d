"""Process-pool map over primes with results returned in input order."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    return 1


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T],
                workers: int | None = None) -> list[R]:
    """map(fn, items) on up to ``workers`` processes.

    Output order matches input order, so any later reduction is
    independent of how the work was split.
    """
    items = list(items)
    workers = workers or default_workers()
    workers = max(1, min(workers, len(items) or 1))
    if workers == 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
