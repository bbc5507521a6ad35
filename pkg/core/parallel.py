"""
SocSec Parallel Execution

Chunked process-pool execution with results returned in submission order.
Every task carries everything it needs (parameters, seeds, index range), so
the reduction never depends on which worker ran which chunk.
"""
from __future__ import annotations

import logging
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Optional, Sequence, TypeVar

from core.exceptions import ErrorCodes, SimulationError, SocSecError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "SOCSEC_WORKERS"


def default_workers() -> int:
    """Worker count from SOCSEC_WORKERS, else 1."""
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {WORKERS_ENV}={raw!r}")
        return 1
    return value if value > 0 else mp.cpu_count()


def chunk_ranges(total: int, chunk_size: int) -> list[tuple[int, int]]:
    """Split [0, total) into consecutive [start, stop) ranges."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be at least 1")
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


class TrialExecutor:
    """
    Run independent tasks inline or on a spawn-context process pool.

    Example:
        >>> executor = TrialExecutor(max_workers=4)
        >>> results = executor.map(simulate_chunk, tasks)
    """

    def __init__(self, max_workers: int = 1) -> None:
        self.max_workers = max_workers if max_workers > 0 else mp.cpu_count()
        self._executor: Optional[ProcessPoolExecutor] = None

    def map(
        self,
        func: Callable[[T], R],
        tasks: Sequence[T],
        callback: Optional[Callable[[int, R], None]] = None,
    ) -> list[R]:
        """
        Apply ``func`` to every task; results come back in task order.

        Raises:
            SimulationError: If a task raises a non-domain exception inside a
                worker. SocSecError subclasses propagate unchanged.
        """
        if self.max_workers == 1 or len(tasks) <= 1:
            results = []
            for index, task in enumerate(tasks):
                result = func(task)
                if callback:
                    callback(index, result)
                results.append(result)
            return results

        ordered: list[Any] = [None] * len(tasks)
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=min(self.max_workers, len(tasks)), mp_context=ctx) as executor:
            self._executor = executor
            future_to_index = {executor.submit(func, task): index for index, task in enumerate(tasks)}
            for future in as_completed(future_to_index):
                index = future_to_index[future]
                try:
                    result = future.result()
                except SocSecError as e:
                    # domain errors keep their type, code and details across the pool
                    logger.error(f"Chunk {index} failed: {e}")
                    executor.shutdown(wait=False, cancel_futures=True)
                    raise
                except Exception as e:
                    logger.error(f"Chunk {index} failed: {e}")
                    executor.shutdown(wait=False, cancel_futures=True)
                    raise SimulationError(
                        f"Chunk {index} failed: {e}",
                        error_code=ErrorCodes.WORKER_FAILED,
                        chunk_index=index,
                    ) from e
                ordered[index] = result
                logger.debug(f"Chunk {index + 1}/{len(tasks)} done")
                if callback:
                    callback(index, result)
        self._executor = None
        return ordered

    def shutdown(self) -> None:
        if self._executor:
            self._executor.shutdown(wait=False, cancel_futures=True)
            self._executor = None


__all__ = ["TrialExecutor", "chunk_ranges", "default_workers", "WORKERS_ENV"]
