"""
ReduceDPP: folds an optionally transformed plane into one element

Rows of the (z, y) space are split into one contiguous range per worker.
Each worker folds its range sequentially, chunk_rows rows at a time, into
a private partial; partials are then combined in worker-index order on
the calling thread. Several specs may share one traversal of the source.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional, Sequence

import numpy as np

from fusedkernel.config.execution_config import ExecConfig, get_config
from fusedkernel.errors import EmptyIterSpaceError, KindMismatchError, ParamsError
from fusedkernel.executor.pool import get_pool
from fusedkernel.ops.core import InstantiableOp, OpKind, infer_iter_space
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)


class Reducer(Enum):
    SUM = "Sum"
    MAX = "Max"
    MIN = "Min"
    MEAN = "Mean"


def accumulator_dtype(kind: ScalarKind) -> np.dtype:
    return np.dtype(np.float64) if kind.is_float else np.dtype(np.int64)


def default_identity(reducer: Reducer, kind: ScalarKind):
    """Neutral element of `reducer` over values of `kind`"""
    if reducer in (Reducer.SUM, Reducer.MEAN):
        value = accumulator_dtype(kind).type(0)
    elif kind.is_float:
        value = kind.dtype.type(-np.inf if reducer == Reducer.MAX else np.inf)
    else:
        limits = np.iinfo(kind.dtype)
        value = kind.dtype.type(limits.min if reducer == Reducer.MAX else limits.max)
    if kind.is_packed:
        return np.full(3, value, dtype=np.asarray(value).dtype)
    return value


@dataclass(frozen=True, eq=False)
class ReduceSpec:
    """
    One reduction: an optional compute IOp applied to each element, then
    the combine. Only a single transform IOp is accepted.
    """
    transform: Optional[InstantiableOp] = None
    combine: Reducer = Reducer.SUM
    identity: Any = None

    def __post_init__(self):
        object.__setattr__(self, 'combine', Reducer(self.combine))
        if self.transform is not None and not self.transform.kind.is_compute:
            raise ParamsError(f"Reduce transform must be Unary or Binary, got {self.transform.kind}")

    def value_kind(self, read_kind: ScalarKind) -> ScalarKind:
        if self.transform is None:
            return read_kind
        if self.transform.signature.input_kind != read_kind:
            raise KindMismatchError(1, read_kind, self.transform.signature.input_kind)
        return self.transform.signature.output_kind


class _Fold:
    """Per-spec fold state resolved before the traversal"""

    def __init__(self, spec: ReduceSpec, read_kind: ScalarKind):
        self.spec = spec
        self.kind = spec.value_kind(read_kind)
        self.reducer = spec.combine
        self.identity = (default_identity(self.reducer, self.kind)
                         if spec.identity is None else spec.identity)
        if spec.transform is not None:
            operation = spec.transform.operation
            params = spec.transform.params
            self.transform = lambda values: operation.exec(values, params)
        else:
            self.transform = None
        self.acc_dtype = accumulator_dtype(self.kind)

    def partial(self, tile: np.ndarray):
        values = tile if self.transform is None else self.transform(tile)
        if self.reducer == Reducer.MAX:
            return values.max(axis=(0, 1))
        if self.reducer == Reducer.MIN:
            return values.min(axis=(0, 1))
        return values.sum(axis=(0, 1), dtype=self.acc_dtype)

    def combine(self, left, right):
        if self.reducer == Reducer.MAX:
            return np.maximum(left, right)
        if self.reducer == Reducer.MIN:
            return np.minimum(left, right)
        return np.add(left, right, dtype=self.acc_dtype)

    def finish(self, total, count: int):
        if self.reducer == Reducer.MEAN:
            return np.true_divide(total, count, dtype=np.float64)
        return total


def _row_ranges(total_rows: int, workers: int):
    base, extra = divmod(total_rows, workers)
    ranges = []
    begin = 0
    for index in range(workers):
        end = begin + base + (1 if index < extra else 0)
        ranges.append((begin, end))
        begin = end
    return ranges


def multi_reduce_plane(read_iop: InstantiableOp, specs: Sequence[ReduceSpec],
                       config: Optional[ExecConfig] = None) -> List[Any]:
    """Apply every spec while reading each source element exactly once"""
    if not specs:
        raise ParamsError("multi_reduce_plane needs at least one ReduceSpec")
    if read_iop.kind != OpKind.READ:
        raise ParamsError(f"Reduce source must be ReadType, got {read_iop.kind}")
    config = config or get_config()

    width, height, batch = infer_iter_space(read_iop)
    if width * height * batch == 0:
        raise EmptyIterSpaceError(f"{read_iop.op_id} covers an empty space {(width, height, batch)}")

    read_kind = read_iop.signature.output_kind
    folds = [_Fold(spec, read_kind) for spec in specs]
    read_tile = read_iop.operation.read_tile
    read_params = read_iop.params
    chunk_rows = config.chunk_rows

    def fold_range(row_range):
        begin, end = row_range
        partials = [fold.identity for fold in folds]
        row = begin
        with np.errstate(all='ignore'):
            while row < end:
                z, y = divmod(row, height)
                stop = min(end, row + chunk_rows, (z + 1) * height)
                tile = read_tile(read_params, z, y, y + stop - row, 0, width)
                for index, fold in enumerate(folds):
                    partials[index] = fold.combine(partials[index], fold.partial(tile))
                row = stop
        return partials

    workers = config.resolved_workers()
    ranges = _row_ranges(height * batch, workers)
    results = get_pool(config.workers).run(fold_range, ranges)

    count = width * height * batch
    values = []
    with np.errstate(all='ignore'):
        for index, fold in enumerate(folds):
            total = fold.identity
            for partials in results:
                total = fold.combine(total, partials[index])
            values.append(fold.finish(total, count))
    logger.debug(f"Reduced {count} elements of {read_iop.op_id} with {len(folds)} specs on {workers} workers")
    return values


def reduce_plane(read_iop: InstantiableOp, spec: ReduceSpec,
                 config: Optional[ExecConfig] = None):
    return multi_reduce_plane(read_iop, [spec], config)[0]
