"""Replica batching with deterministic per-batch random streams.

Batches are cut by a fixed size and each gets a child generator spawned from
the caller's generator, so results depend on (seed, replicas, batch size)
and never on the number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

THREADS_ENV = "GLAUBER1D_THREADS"
DEFAULT_BATCH = 50_000


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def batch_sizes(replicas: int, batch_size: int = DEFAULT_BATCH) -> list[int]:
    full, rest = divmod(int(replicas), int(batch_size))
    return [batch_size] * full + ([rest] if rest else [])


def run_batches(
    fn: Callable[[int, np.random.Generator], T],
    replicas: int,
    rng: np.random.Generator,
    batch_size: int = DEFAULT_BATCH,
    workers: int | None = None,
) -> list[T]:
    """Call ``fn(size, child_rng)`` once per batch, results in batch order."""
    sizes = batch_sizes(replicas, batch_size)
    children = rng.spawn(len(sizes))
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(sizes) <= 1:
        return [fn(s, g) for s, g in zip(sizes, children)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, sizes, children))
