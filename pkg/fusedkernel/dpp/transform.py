"""
TransformDPP: walks a Pipeline over ThreadPoints

transform_point is the dynamic path: every exec is selected by op tag
per element. transform_range and transform_tile run the statically
composed kernel over rows, coarsened into `block`-wide groups.
"""

from typing import Tuple

import numpy as np

from fusedkernel.dpp.coarsening import CoarseningPlan, TailPolicy
from fusedkernel.ops.core import Pipeline, compute_exec, read_exec, write_exec
from fusedkernel.tensor.plane import ThreadPoint


def transform_point(pipeline: Pipeline, thread: ThreadPoint) -> None:
    with np.errstate(all='ignore'):
        value = read_exec(pipeline.read, thread)
        for iop in pipeline.compute:
            value = compute_exec(iop, value)
        write_exec(pipeline.write, thread, value)


def transform_tile(pipeline: Pipeline, z: int, y0: int, y1: int, x0: int, x1: int,
                   plan: CoarseningPlan = CoarseningPlan()) -> int:
    """Rows y0..y1, columns x0..x1 of plane z; returns points processed"""
    kernel = pipeline.kernel
    body, tail = plan.split(x1 - x0)
    if body:
        kernel.run_tile(z, y0, y1, x0, x0 + body, block=plan.block)
    if tail:
        if plan.tail_policy == TailPolicy.POINTWISE:
            for y in range(y0, y1):
                for x in range(x0 + body, x1):
                    transform_point(pipeline, ThreadPoint(x, y, z))
        else:
            kernel.run_tile(z, y0, y1, x0 + body, x1)
    return (y1 - y0) * (x1 - x0)


def transform_range(pipeline: Pipeline, y: int, z: int, x_range: Tuple[int, int],
                    plan: CoarseningPlan = CoarseningPlan()) -> int:
    x0, x1 = x_range
    return transform_tile(pipeline, z, y, y + 1, x0, x1, plan)
