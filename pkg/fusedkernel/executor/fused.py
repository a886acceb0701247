"""
Fused execution strategy: one sweep over the iteration space
"""

import logging
import time
from typing import Optional

import numpy as np

from fusedkernel.config.execution_config import ExecConfig, get_config
from fusedkernel.dpp.transform import transform_tile
from fusedkernel.executor.pool import get_pool
from fusedkernel.executor.report import ExecReport
from fusedkernel.executor.schedule import Task, schedule
from fusedkernel.ops.core import Pipeline

logger = logging.getLogger(__name__)


def run_pass(pipeline: Pipeline, config: ExecConfig) -> ExecReport:
    """Visit every point of the pipeline's space once through the worker pool"""
    kernel = pipeline.kernel
    width = pipeline.iter_space[0]
    plan = config.coarsening

    def run(task: Task):
        with np.errstate(all='ignore'):
            points = transform_tile(pipeline, task.z, task.y_begin, task.y_end, 0, width, plan)
        bytes_read, bytes_written = kernel.traffic(task.z, points)
        return points, bytes_read, bytes_written

    tasks = schedule(pipeline.iter_space, config)
    start = time.perf_counter_ns()
    results = get_pool(config.workers).run(run, tasks)
    elapsed = time.perf_counter_ns() - start

    report = ExecReport(wall_time_ns=elapsed, passes=1)
    for points, bytes_read, bytes_written in results:
        report.points_visited += points
        report.bytes_read += bytes_read
        report.bytes_written += bytes_written
    return report


def execute_fused(pipeline: Pipeline, config: Optional[ExecConfig] = None) -> ExecReport:
    """Read -> compute* -> Write in a single pass; intermediates stay in tile locals"""
    config = config or get_config()
    report = run_pass(pipeline, config)
    logger.debug(
        f"Fused run of {pipeline.compute_count} compute ops over {pipeline.iter_space}: "
        f"{report.points_visited} points in {report.wall_time_ns} ns"
    )
    return report
