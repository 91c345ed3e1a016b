from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, Sequence

from threadpoolctl import threadpool_limits


def _call_single_threaded(payload: tuple[Callable[..., Any], Any]) -> Any:
    fn, item = payload
    # One BLAS thread everywhere so the bits do not depend on worker count.
    with threadpool_limits(limits=1):
        return fn(item)


def parallel_map(fn: Callable[[Any], Any], items: Iterable[Any], workers: int = 1) -> list[Any]:
    """Ordered map over ``items``; identical output for any ``workers``.

    ``fn`` must be a picklable module-level callable when ``workers > 1``.
    """
    items: Sequence[Any] = list(items)
    payloads = [(fn, it) for it in items]
    if workers <= 1 or len(items) <= 1:
        return [_call_single_threaded(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call_single_threaded, payloads, chunksize=1))
