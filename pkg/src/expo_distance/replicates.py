"""Order-preserving evaluation of independent Monte Carlo replicates."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import TYPE_CHECKING

import numpy as np

from expo_distance.common import ConfigError

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

    from expo_distance.common import FloatArray

logger = logging.getLogger(__name__)

CHUNKS_PER_WORKER = 8


def _check_workers(workers: int) -> None:
    if workers < 1:
        msg = f"workers must be at least 1, got {workers}"
        raise ConfigError(msg)


def map_replicates(func: Callable[[int], float], count: int, *, workers: int = 1) -> FloatArray:
    """Evaluate `func(index)` for every replicate index and collect the results in index order.

    Each replicate must derive its randomness from its own index (see `replicate_rng`), so
    the result does not depend on the number of workers. With more than one worker, `func`
    must be picklable, e.g. a module-level function wrapped in `functools.partial`.

    Args:
        func (Callable[[int], float]): The per-replicate computation.
        count (int): Number of replicates.
        workers (int): Number of worker processes; 1 runs in the calling process.

    Returns:
        FloatArray: The `count` results.

    """
    _check_workers(workers)
    if count <= 0:
        return np.empty(0, dtype=np.float64)
    if workers == 1 or count == 1:
        return np.fromiter((func(index) for index in range(count)), dtype=np.float64, count=count)

    chunksize = max(1, count // (workers * CHUNKS_PER_WORKER))
    logger.debug("Running %s replicates on %s workers (chunksize %s)", count, workers, chunksize)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return np.fromiter(executor.map(func, range(count), chunksize=chunksize), dtype=np.float64, count=count)


def map_tasks[T, R](func: Callable[[T], R], items: Iterable[T], *, workers: int = 1) -> list[R]:
    """Apply `func` to independent work items, preserving their order."""
    _check_workers(workers)
    if workers == 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
