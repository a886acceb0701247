"""
Worker pool management for data-parallel execution
"""

import atexit
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

Task = TypeVar('Task')
Result = TypeVar('Result')


def hardware_workers() -> int:
    return os.cpu_count() or 1


class WorkerPool:
    """
    Fixed set of worker threads consuming a task list through the shared
    queue of a ThreadPoolExecutor. numpy releases the GIL inside element
    loops, so tile-sized tasks run concurrently.
    """

    def __init__(self, workers: int):
        self.workers = workers if workers > 0 else hardware_workers()
        self._executor: Optional[ThreadPoolExecutor] = None
        self._lock = threading.Lock()

    def _ensure_executor(self) -> ThreadPoolExecutor:
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(
                    max_workers=self.workers, thread_name_prefix=f"fk-worker-{self.workers}"
                )
                logger.debug(f"Started pool with {self.workers} workers")
            return self._executor

    def run(self, fn: Callable[[Task], Result], tasks: Sequence[Task]) -> List[Result]:
        """Run fn over tasks; results come back in task order"""
        if self.workers == 1 or len(tasks) <= 1:
            return [fn(task) for task in tasks]
        return list(self._ensure_executor().map(fn, tasks))

    def shutdown(self) -> None:
        with self._lock:
            executor, self._executor = self._executor, None
        if executor is not None:
            executor.shutdown(wait=True)
            logger.debug(f"Pool with {self.workers} workers shut down")


_pools: Dict[int, WorkerPool] = {}
_pools_lock = threading.Lock()


def get_pool(workers: int) -> WorkerPool:
    """Shared pool for a worker count; created on first use"""
    workers = workers if workers > 0 else hardware_workers()
    with _pools_lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = WorkerPool(workers)
            _pools[workers] = pool
        return pool


def shutdown_pools() -> None:
    with _pools_lock:
        for pool in _pools.values():
            pool.shutdown()
        _pools.clear()


atexit.register(shutdown_pools)
