"""
Task runner for independent estimation tasks (multi-start EM, bootstrap)

Results always come back in task order, so the output does not depend on
whether tasks ran serially or in worker processes.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Any, Iterable, List, Optional

from config import get_workers

logger = logging.getLogger(__name__)


class TaskRunner:
    """Runs module-level task functions serially or in a process pool"""

    def __init__(self, parallel: bool = False, max_workers: Optional[int] = None):
        self.parallel = parallel
        self.max_workers = max_workers

    def map(self, func: Callable[[Any], Any], tasks: Iterable[Any], label: str = "tasks") -> List[Any]:
        """Apply func to every task, preserving task order"""
        tasks = list(tasks)
        workers = min(self.max_workers or get_workers(), len(tasks))

        if not self.parallel or workers <= 1:
            logger.debug(f"Running {len(tasks)} {label} serially")
            return [func(task) for task in tasks]

        logger.info(f"Running {len(tasks)} {label} on {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(func, tasks))

    def get_info(self) -> dict:
        """Runner configuration"""
        return {"parallel": self.parallel, "max_workers": self.max_workers or get_workers()}


# Default serial instance
serial_runner = TaskRunner(parallel=False)


def get_runner(parallel: bool = False) -> TaskRunner:
    """Serial runner or a fresh parallel one"""
    return TaskRunner(parallel=True) if parallel else serial_runner
