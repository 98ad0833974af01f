"""Order-preserving chunked map over a process pool."""
from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence

JOBS_ENV = "ASRNOISE_JOBS"

_state: dict = {}


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if raw is None:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ValueError(f"{JOBS_ENV} must be a positive integer, got {raw!r}") from None
    if jobs < 1:
        raise ValueError(f"{JOBS_ENV} must be a positive integer, got {raw!r}")
    return jobs


def _init(payload):
    _state["payload"] = payload


def _run(args):
    fn, chunk = args
    return fn(_state["payload"], chunk)


def chunks(items: Sequence, n: int) -> List[Sequence]:
    size = max(1, -(-len(items) // n))
    return [items[i : i + size] for i in range(0, len(items), size)]


def map_chunks(fn: Callable, payload, items: Sequence, jobs: int = 1) -> list:
    """Apply ``fn(payload, chunk)`` to contiguous chunks of ``items``; results keep chunk order.

    ``payload`` is shipped to each worker once.  ``fn`` must be a module-level
    function so it can be pickled.
    """
    if jobs <= 1 or len(items) < 2:
        return [fn(payload, items)]
    parts = chunks(items, jobs * 4)
    ctx = multiprocessing.get_context("fork" if os.name == "posix" else "spawn")
    with ProcessPoolExecutor(jobs, mp_context=ctx, initializer=_init, initargs=(payload,)) as ex:
        return list(ex.map(_run, [(fn, c) for c in parts]))
