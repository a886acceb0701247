"""
Unfused baseline: one full pass per compute op with materialised intermediates
"""

import logging
from typing import Optional, Sequence

from fusedkernel.config.execution_config import ExecConfig, get_config
from fusedkernel.executor.fused import run_pass
from fusedkernel.executor.report import ExecReport
from fusedkernel.ops.core import InstantiableOp, Pipeline, validate_chain
from fusedkernel.ops.memory import (
    op_batch_read, op_batch_write, op_read_per_thread, op_write_per_thread,
)
from fusedkernel.tensor.plane import PlaneBatch, batch_alloc
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)


def _intermediate_io(intermediate: PlaneBatch):
    """Write IOp filling an intermediate and read IOp consuming it"""
    if len(intermediate) == 1:
        plane = intermediate[0]
        return op_write_per_thread(plane), op_read_per_thread(plane)
    writes = [op_write_per_thread(plane) for plane in intermediate]
    reads = [op_read_per_thread(plane) for plane in intermediate]
    return op_batch_write(writes), op_batch_read(reads)


def intermediate_nbytes(width: int, height: int, kind: ScalarKind, batch: int = 1) -> int:
    """Bytes of one materialised intermediate"""
    return width * height * batch * kind.byte_width


def plan_memory_savings(pipeline: Pipeline) -> int:
    """Bytes the unfused baseline would allocate for intermediates"""
    width, height, batch = pipeline.iter_space
    return sum(
        intermediate_nbytes(width, height, iop.signature.output_kind, batch)
        for iop in pipeline.compute
    )


def execute_unfused(iops: Sequence[InstantiableOp], config: Optional[ExecConfig] = None) -> ExecReport:
    """
    Pass i reads the previous result, applies compute op i and writes a
    freshly allocated intermediate; a last pass copies the final
    intermediate into the destination. The first pass reads the source.
    """
    config = config or get_config()
    pipeline = validate_chain(iops)
    width, height, batch = pipeline.iter_space

    report = ExecReport()
    current_read = pipeline.read
    for index, iop in enumerate(pipeline.compute):
        intermediate = batch_alloc(width, height, iop.signature.output_kind, batch)
        allocated = sum(plane.nbytes for plane in intermediate)
        logger.debug(f"Pass {index + 1}: {iop.op_id} into {allocated}-byte intermediate")

        write_iop, next_read = _intermediate_io(intermediate)
        step = Pipeline(current_read, (iop,), write_iop, pipeline.iter_space)
        pass_report = run_pass(step, config)
        pass_report.intermediate_bytes_allocated = allocated
        report.absorb(pass_report)

        # dropping the last reference to the previous intermediate frees it
        current_read = next_read

    final = Pipeline(current_read, (), pipeline.write, pipeline.iter_space)
    report.absorb(run_pass(final, config))
    logger.debug(
        f"Unfused run of {pipeline.compute_count} compute ops: {report.passes} passes, "
        f"{report.intermediate_bytes_allocated} intermediate bytes"
    )
    return report
