"""Worker-count resolution and deterministic chunked mapping."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from .errors import ConfigError

THREADS_ENV_VAR = "ISODECONV_THREADS"


def resolve_workers(threads: int = 0) -> int:
    """Turn a --threads value into a worker count (0 = auto).

    Auto consults the ISODECONV_THREADS environment variable, then the
    CPU count.
    """
    threads = int(threads)
    if threads < 0:
        raise ConfigError(f"thread count must be >= 0, got {threads}")
    if threads == 0:
        env = os.environ.get(THREADS_ENV_VAR, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV_VAR}={env!r} is not an integer") from None
            if threads < 1:
                raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1, got {threads}")
        else:
            threads = os.cpu_count() or 1
    return threads


def map_chunks(fn, tasks, threads: int = 0) -> list:
    """Map fn over tasks, in order, optionally across worker processes.

    Results are identical for any worker count: tasks carry their own
    stream keys and the reduce preserves task order.
    """
    tasks = list(tasks)
    workers = resolve_workers(threads)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
