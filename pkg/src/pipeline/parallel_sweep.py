import os
import time
from concurrent.futures import Future, ThreadPoolExecutor
from multiprocessing import Pool
from typing import Any, Callable, List, Optional, Sequence, Tuple

from src.config.config_loader import config
from src.config.log_config import logger


def resolve_worker_count(requested: Optional[int] = None) -> int:
    """Worker count from the request or config, capped by the LAB_THREADS environment variable."""
    workers = requested if requested is not None else config.parallel.max_workers
    env_name = config.parallel.threads_env_var
    env_value = os.environ.get(env_name)
    if env_value:
        try:
            workers = min(workers, max(1, int(env_value)))
        except ValueError:
            logger.warning("Ignoring %s=%r: not an integer, using %s workers", env_name, env_value, workers)
    return max(1, int(workers))


class ParallelSweep:
    """
    Runs one worker function over a list of independent tasks (seeds, directions,
    layouts) in a process or thread pool. Results come back in submission order,
    so every reduction done afterwards is independent of the worker count.
    """

    def __init__(
            self,
            num_workers: Optional[int] = None,
            running_mode: Optional[str] = None,
            label: str = "sweep",
    ) -> None:
        self.num_workers = resolve_worker_count(num_workers)
        self.running_mode = running_mode or config.parallel.running_mode
        self.label = label

    def run(self, worker: Callable[..., Any], task_arguments: Sequence[Tuple[Any, ...]]) -> List[Any]:
        """Apply `worker(*arguments)` to every task and return the results in task order."""
        start_time = time.perf_counter()
        if not task_arguments:
            return []
        if self.num_workers == 1 or len(task_arguments) == 1:
            results = [worker(*arguments) for arguments in task_arguments]
        elif self.running_mode == "process":
            results = self._run_with_processes(worker, task_arguments)
        else:
            results = self._run_with_threads(worker, task_arguments)

        elapsed_time = time.perf_counter() - start_time
        logger.info("%s: %s tasks finished in %.2fs", self.label, len(task_arguments), elapsed_time)
        return results

    def _run_with_processes(self, worker: Callable[..., Any], task_arguments: Sequence[Tuple[Any, ...]]) -> List[Any]:
        """Worker and arguments must be picklable (module-level functions, plain data)."""
        logger.info("%s: initializing Multiprocessing Pool with %s workers...", self.label, self.num_workers)
        with Pool(processes=self.num_workers) as process_pool:
            return process_pool.starmap(worker, task_arguments)

    def _run_with_threads(self, worker: Callable[..., Any], task_arguments: Sequence[Tuple[Any, ...]]) -> List[Any]:
        logger.info("%s: initializing ThreadPoolExecutor with %s threads...", self.label, self.num_workers)
        results = []
        with ThreadPoolExecutor(max_workers=self.num_workers) as thread_pool:
            futures: List[Future] = [thread_pool.submit(worker, *arguments) for arguments in task_arguments]
            for future in futures:
                results.append(future.result())
        return results
