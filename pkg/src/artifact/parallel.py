"""Order-preserving map used for optional process parallelism."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterator

JOBS_ENV = "ARTIFACT_JOBS"

MapFn = Callable  # map(func, iterable) -> iterable, results in input order


def default_jobs() -> int:
    value = os.environ.get(JOBS_ENV)
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@contextmanager
def worker_map(jobs: int | None = None) -> Iterator[MapFn]:
    """Yield a ``map``-like callable backed by ``jobs`` worker processes.

    With one job this is the builtin ``map``; results always come back in
    input order so reductions stay deterministic.
    """
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield pool.map
