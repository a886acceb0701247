"""
StaticLoop and compute-chain operations

StaticLoop repeats one compute IOp N times while storing its parameters
once; a compute chain packs several compute IOps into one so that, for
example, a Mul+Add pair can be looped.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from fusedkernel.errors import KindMismatchError, ParamsError
from fusedkernel.ops.core import (
    ComputeOperation, InstantiableOp, instantiate,
)


@dataclass(frozen=True, eq=False)
class StaticLoopParams:
    inner: InstantiableOp
    repeat: int

    def __post_init__(self):
        if self.repeat < 1:
            raise ParamsError(f"StaticLoop repeat must be >= 1, got {self.repeat}")
        if not self.inner.kind.is_compute:
            raise ParamsError(f"StaticLoop inner op must be Unary or Binary, got {self.inner.kind}")
        signature = self.inner.signature
        if signature.input_kind != signature.output_kind:
            raise KindMismatchError(0, signature.input_kind, signature.output_kind)


@dataclass(frozen=True, eq=False)
class ComputeChainParams:
    stages: Tuple[InstantiableOp, ...]

    def __post_init__(self):
        if not self.stages:
            raise ParamsError("Compute chain needs at least one op")
        for position, iop in enumerate(self.stages):
            if not iop.kind.is_compute:
                raise ParamsError(f"Compute chain op #{position} is {iop.kind}")
            if position and self.stages[position - 1].signature.output_kind != iop.signature.input_kind:
                raise KindMismatchError(
                    position, self.stages[position - 1].signature.output_kind, iop.signature.input_kind
                )


class StaticLoop(ComputeOperation):
    params_type = StaticLoopParams

    def __init__(self, inner: InstantiableOp):
        kind = inner.signature.input_kind
        super().__init__(f"static_loop[{inner.op_id}]", kind, kind)

    def exec(self, value, params: StaticLoopParams):
        inner = params.inner.operation
        inner_params = params.inner.params
        for _ in range(params.repeat):
            value = inner.exec(value, inner_params)
        return value

    def bind(self, params: StaticLoopParams):
        stage = params.inner.operation.bind(params.inner.params)
        repeat = params.repeat

        def looped(values):
            for _ in range(repeat):
                values = stage(values)
            return values
        return looped


class ComputeChain(ComputeOperation):
    params_type = ComputeChainParams

    def __init__(self, stages: Sequence[InstantiableOp]):
        ids = ','.join(iop.op_id for iop in stages)
        super().__init__(f"chain[{ids}]", stages[0].signature.input_kind,
                         stages[-1].signature.output_kind)

    def exec(self, value, params: ComputeChainParams):
        for iop in params.stages:
            value = iop.operation.exec(value, iop.params)
        return value

    def bind(self, params: ComputeChainParams):
        stages = tuple(iop.operation.bind(iop.params) for iop in params.stages)

        def chained(values):
            for stage in stages:
                values = stage(values)
            return values
        return chained


def op_static_loop(inner: InstantiableOp, repeat: int) -> InstantiableOp:
    """Repeat `inner` `repeat` times. Always BinaryType: the repeat count is a parameter."""
    params = StaticLoopParams(inner, repeat)
    return instantiate(StaticLoop(inner), params)


def op_compute_chain(stages: Sequence[InstantiableOp]) -> InstantiableOp:
    params = ComputeChainParams(tuple(stages))
    return instantiate(ComputeChain(params.stages), params)


def expand_static_loops(iops: Sequence[InstantiableOp]) -> List[InstantiableOp]:
    """Flatten StaticLoop and compute-chain IOps into single-op IOps"""
    flat: List[InstantiableOp] = []
    for iop in iops:
        params = iop.params
        if isinstance(params, StaticLoopParams):
            inner = expand_static_loops([params.inner])
            for _ in range(params.repeat):
                flat.extend(inner)
        elif isinstance(params, ComputeChainParams):
            flat.extend(expand_static_loops(params.stages))
        else:
            flat.append(iop)
    return flat
