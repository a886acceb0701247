"""
Operation archetypes, Instantiable Operations and chain validation

An Operation is a stateless, registered object whose identity fixes its
element kinds (the analogue of a template instantiation). An
InstantiableOp pairs that identity with immutable runtime parameters.
A chain of IOps Read -> (Unary|Binary)* -> Write validates into a
Pipeline, the unit of fused execution.
"""

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from fusedkernel.errors import (
    ChainTooLongError, DimsMismatchError, EmptyChainError, FirstNotReadError,
    KindMismatchError, LastNotWriteError, MissingDimsError, ParamsError,
)
from fusedkernel.tensor.plane import ThreadPoint
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)

# No kernel parameter-space limit exists on CPU; the cap only bounds memory.
MAX_CHAIN_LENGTH = 4096

IterSpace = Tuple[int, int, int]


class OpKind(Enum):
    READ = "ReadType"
    UNARY = "UnaryType"
    BINARY = "BinaryType"
    WRITE = "WriteType"

    @property
    def is_compute(self) -> bool:
        return self in (OpKind.UNARY, OpKind.BINARY)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class OpSignature:
    kind: OpKind
    input_kind: Optional[ScalarKind]
    output_kind: Optional[ScalarKind]
    params_descriptor: Optional[type] = None

    def __post_init__(self):
        if (self.input_kind is None) != (self.kind == OpKind.READ):
            raise ParamsError(f"{self.kind} input_kind must be set iff the op is not a read")
        if (self.output_kind is None) != (self.kind == OpKind.WRITE):
            raise ParamsError(f"{self.kind} output_kind must be set iff the op is not a write")
        if self.kind == OpKind.UNARY and self.params_descriptor is not None:
            raise ParamsError("UnaryType operations take no parameters")


class Operation:
    """
    Base class of every concrete operation.

    Subclasses set `kind`, `input_kind`, `output_kind` and `params_type`
    and implement the exec variants of their archetype:

      Read:    read(thread, params), read_tile(params, z, y0, y1, x0, x1)
      Unary/Binary: exec(value, params), bind(params)
      Write:   write(thread, value, params), write_tile(params, z, y0, y1, x0, x1, values)
    """
    kind: OpKind
    params_type: Optional[type] = None

    def __init__(self, op_id: str, input_kind: Optional[ScalarKind],
                 output_kind: Optional[ScalarKind]):
        self.op_id = op_id
        self.input_kind = input_kind
        self.output_kind = output_kind

    @property
    def signature(self) -> OpSignature:
        return OpSignature(self.kind, self.input_kind, self.output_kind, self.params_type)

    def validate(self, params: Any) -> None:
        """Schema check; raises ParamsError"""
        if self.params_type is None:
            if params is not None:
                raise ParamsError(f"{self.op_id} takes no parameters")
        elif not isinstance(params, self.params_type):
            raise ParamsError(
                f"{self.op_id} expects {self.params_type.__name__}, got {type(params).__name__}"
            )

    def dims(self, params: Any) -> Optional[IterSpace]:
        """(width, height, batch) for memory operations"""
        return None

    def describe(self) -> str:
        return self.op_id

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.op_id})"


class ComputeOperation(Operation):
    kind = OpKind.BINARY

    def exec(self, value, params):
        """Pure element function; works on single elements and on arrays of elements"""
        raise NotImplementedError

    def bind(self, params) -> Callable[[np.ndarray], np.ndarray]:
        """
        Array function with params resolved, for the static path. It may
        overwrite the tile it receives, which the caller must own.
        """
        return lambda values: self.exec(values, params)


class UnaryOperation(ComputeOperation):
    kind = OpKind.UNARY


class ReadOperation(Operation):
    kind = OpKind.READ

    def __init__(self, op_id: str, output_kind: ScalarKind):
        super().__init__(op_id, None, output_kind)

    def read(self, thread: ThreadPoint, params):
        raise NotImplementedError

    def read_tile(self, params, z: int, y0: int, y1: int, x0: int, x1: int) -> np.ndarray:
        """Fresh array of shape (y1-y0, x1-x0) + element shape, owned by the caller"""
        raise NotImplementedError

    def read_bytes(self, params, z: int) -> int:
        """Bytes fetched from memory per point of plane z"""
        return self.output_kind.byte_width


class WriteOperation(Operation):
    kind = OpKind.WRITE

    def __init__(self, op_id: str, input_kind: ScalarKind):
        super().__init__(op_id, input_kind, None)

    def write(self, thread: ThreadPoint, value, params) -> None:
        raise NotImplementedError

    def write_tile(self, params, z: int, y0: int, y1: int, x0: int, x1: int,
                   values: np.ndarray) -> None:
        raise NotImplementedError

    def write_bytes(self, params, z: int) -> int:
        return self.input_kind.byte_width


_registry_lock = threading.Lock()
OPERATIONS: Dict[str, Operation] = {}


def register_operation(operation: Operation) -> Operation:
    """Register an operation under its op_id; returns the canonical instance"""
    with _registry_lock:
        existing = OPERATIONS.get(operation.op_id)
        if existing is not None:
            return existing
        OPERATIONS[operation.op_id] = operation
        return operation


def get_operation(op_id: str) -> Operation:
    try:
        return OPERATIONS[op_id]
    except KeyError:
        raise ParamsError(f"Unknown operation id {op_id!r}") from None


@dataclass(frozen=True, eq=False)
class InstantiableOp:
    signature: OpSignature
    op_id: str
    params: Any = None
    dims_hint: Optional[IterSpace] = None

    @property
    def kind(self) -> OpKind:
        return self.signature.kind

    @property
    def operation(self) -> Operation:
        return get_operation(self.op_id)

    def __repr__(self) -> str:
        return f"IOp({self.op_id})"


def instantiate(operation: Operation, params: Any = None) -> InstantiableOp:
    """Register the operation, check params against its schema and build the IOp"""
    operation = register_operation(operation)
    operation.validate(params)
    dims_hint = None
    if operation.kind in (OpKind.READ, OpKind.WRITE):
        dims_hint = operation.dims(params)
    return InstantiableOp(operation.signature, operation.op_id, params, dims_hint)


# Dynamic path: op selection by op_id tag on every call.

def compute_exec(iop: InstantiableOp, value):
    return OPERATIONS[iop.op_id].exec(value, iop.params)


def read_exec(iop: InstantiableOp, thread: ThreadPoint):
    return OPERATIONS[iop.op_id].read(thread, iop.params)


def write_exec(iop: InstantiableOp, thread: ThreadPoint, value) -> None:
    OPERATIONS[iop.op_id].write(thread, value, iop.params)


@dataclass(frozen=True, eq=False)
class Pipeline:
    read: InstantiableOp
    compute: Tuple[InstantiableOp, ...]
    write: InstantiableOp
    iter_space: IterSpace

    @property
    def iops(self) -> List[InstantiableOp]:
        return [self.read, *self.compute, self.write]

    @property
    def compute_count(self) -> int:
        return len(self.compute)

    @property
    def points(self) -> int:
        width, height, batch = self.iter_space
        return width * height * batch

    @cached_property
    def kernel(self):
        """Statically composed kernel, built once per pipeline"""
        from fusedkernel.ops.compose import FusedKernel
        return FusedKernel(self.read, self.compute, self.write)


def infer_iter_space(read_iop: InstantiableOp) -> IterSpace:
    if read_iop.kind != OpKind.READ:
        raise FirstNotReadError(f"{read_iop.op_id} is {read_iop.kind}, not ReadType", 0)
    if read_iop.dims_hint is None:
        raise MissingDimsError(f"{read_iop.op_id} carries no dimensions", 0)
    return read_iop.dims_hint


def validate_chain(iops: Sequence[InstantiableOp]) -> Pipeline:
    iops = list(iops)
    if not iops:
        raise EmptyChainError("Operation chain is empty")
    if len(iops) > MAX_CHAIN_LENGTH:
        raise ChainTooLongError(
            f"Chain of {len(iops)} IOps exceeds {MAX_CHAIN_LENGTH}; use StaticLoop", MAX_CHAIN_LENGTH
        )

    first, last = iops[0], iops[-1]
    if first.kind != OpKind.READ:
        raise FirstNotReadError(f"First IOp {first.op_id} is {first.kind}, not ReadType", 0)
    if len(iops) < 2 or last.kind != OpKind.WRITE:
        raise LastNotWriteError(f"Last IOp {last.op_id} is {last.kind}, not WriteType", len(iops) - 1)

    for position, iop in enumerate(iops[1:-1], start=1):
        if not iop.kind.is_compute:
            raise KindMismatchError(position, "UnaryType|BinaryType", iop.kind)

    for position in range(1, len(iops)):
        produced = iops[position - 1].signature.output_kind
        consumed = iops[position].signature.input_kind
        if produced != consumed:
            raise KindMismatchError(position, produced, consumed)

    iter_space = infer_iter_space(first)
    if last.dims_hint is None:
        raise MissingDimsError(f"{last.op_id} carries no dimensions", len(iops) - 1)
    if tuple(last.dims_hint) != tuple(iter_space):
        raise DimsMismatchError(
            f"Write dims {last.dims_hint} differ from read dims {iter_space}", len(iops) - 1
        )

    pipeline = Pipeline(first, tuple(iops[1:-1]), last, tuple(iter_space))
    logger.debug(f"Validated chain of {len(iops)} IOps over {iter_space}")
    return pipeline
