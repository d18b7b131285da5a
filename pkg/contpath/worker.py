"""
contpath - Bench Worker Pool
Runs independent benchmark rows concurrently, capped by CONTPATH_THREADS
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

from .config import settings
from .exceptions import ContPathError
from .models import Problem
from .path_runner import run_path
from .schemas import BenchRow, InnerSolverConfig, PathPolicy

# Configure logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchTask:
    """One benchmark row: a policy and an inner-solver configuration"""

    label: str
    policy: PathPolicy
    inner: InnerSolverConfig
    T: Optional[int] = None


def run_bench_task(prob: Problem, task: BenchTask) -> BenchRow:
    """Run one row; failures are recorded on the row instead of raised."""
    row = BenchRow(
        policy=task.label,
        screening=task.inner.dynamic_screening,
        working_set=task.inner.working_set,
        T=task.T,
        eps=task.policy.target_eps,
    )
    started = time.perf_counter()
    try:
        result = run_path(prob, task.policy, task.inner)
    except ContPathError as e:
        logger.error(f"Bench row {task.label} (T={task.T}, eps={task.policy.target_eps:.0e}) failed: {e}")
        row.status = f"error: {e}"
        row.wall_ms = (time.perf_counter() - started) * 1000.0
        return row

    row.total_epochs = result.trace.total_epochs
    row.coordinate_updates = result.trace.total_updates
    row.wall_ms = (time.perf_counter() - started) * 1000.0
    row.final_gap = result.final_gap
    row.status = result.terminated_by.value
    return row


def run_bench(prob: Problem, tasks: List[BenchTask], threads: Optional[int] = None) -> List[BenchRow]:
    """Run every task; rows come back in task order whatever the thread count."""
    workers = max(1, min(threads or settings.THREADS, len(tasks) or 1))
    logger.info(f"Running {len(tasks)} bench rows on {workers} thread(s)")
    if workers == 1:
        return [run_bench_task(prob, task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="contpath-bench") as pool:
        return list(pool.map(lambda task: run_bench_task(prob, task), tasks))
