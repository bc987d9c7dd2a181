"""Table executor: fans replication tasks out to worker processes and reduces in task order."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Sequence, Tuple

from greedy_predict.core.config import settings

logger = logging.getLogger("greedy_predict")


class TableExecutor:
    """Runs a worker over independent tasks.

    Tasks must be picklable and carry ``cell_index`` and ``rep_index``. A task
    whose worker raises is logged and counted; the others carry on. Results
    come back sorted by (cell_index, rep_index) whatever order workers finish
    in, so aggregates do not depend on scheduling.
    """

    def __init__(self, worker: Callable[[Any], Any], threads: Optional[int] = None):
        self.worker = worker
        self.threads = settings.THREADS if threads is None else threads

    def run(self, tasks: Sequence[Any]) -> Tuple[List[Any], List[str]]:
        """Execute every task; return (results in task order, error messages)."""
        started = time.perf_counter()
        if self.threads and self.threads > 1 and len(tasks) > 1:
            results, errors = self._run_pool(tasks)
        else:
            results, errors = self._run_sequential(tasks)
        results.sort(key=lambda r: (r.cell_index, r.rep_index))
        errors.sort()
        logger.info(
            "Executed %d tasks (%d failed) in %.1fs with %s",
            len(tasks),
            len(errors),
            time.perf_counter() - started,
            f"{self.threads} workers" if self.threads and self.threads > 1 else "1 process",
        )
        return results, errors

    def _run_sequential(self, tasks: Sequence[Any]) -> Tuple[List[Any], List[str]]:
        results, errors = [], []
        for task in tasks:
            try:
                results.append(self.worker(task))
            except Exception as e:
                errors.append(self._failure(task, e))
        return results, errors

    def _run_pool(self, tasks: Sequence[Any]) -> Tuple[List[Any], List[str]]:
        results, errors = [], []
        with ProcessPoolExecutor(max_workers=self.threads) as pool:
            futures = {pool.submit(self.worker, task): task for task in tasks}
            for future in as_completed(futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    errors.append(self._failure(futures[future], e))
        return results, errors

    @staticmethod
    def _failure(task: Any, exc: Exception) -> str:
        message = f"cell {task.cell_index} rep {task.rep_index}: {type(exc).__name__}: {exc}"
        logger.warning("Replication failed: %s", message)
        return message
