"""
Lazy final-user facade

Every function here returns a LazyHandle wrapping an IOp; nothing reads
or writes plane data until execute_operations / execute_batch is called.
Names and argument order follow the usual image-library conventions.
"""

import logging
import threading
import weakref
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

from fusedkernel.config.execution_config import ExecConfig, get_config
from fusedkernel.errors import FusedKernelError, HeterogeneousBatchError
from fusedkernel.executor.fused import execute_fused
from fusedkernel.executor.report import ExecReport
from fusedkernel.executor.unfused import execute_unfused
from fusedkernel.ops.arithmetic import op_add, op_div, op_mul, op_sub
from fusedkernel.ops.cast import op_cast
from fusedkernel.ops.color import ColorOrder, SwapRB, op_color_convert
from fusedkernel.ops.core import InstantiableOp, OpKind, Pipeline, validate_chain
from fusedkernel.ops.memory import (
    ResizeMode, op_batch_read, op_batch_write, op_crop, op_read_per_thread,
    op_reorder_read, op_resize, op_split_write, op_write_per_thread,
)
from fusedkernel.tensor.plane import Plane
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LazyHandle:
    iop: InstantiableOp
    provenance: str
    upstream: Optional['LazyHandle'] = None

    @property
    def kind(self) -> OpKind:
        return self.iop.kind

    @property
    def input_kind(self) -> Optional[ScalarKind]:
        return self.iop.signature.input_kind

    @property
    def output_kind(self) -> Optional[ScalarKind]:
        return self.iop.signature.output_kind

    def __repr__(self) -> str:
        return f"LazyHandle({self.provenance}: {self.iop.op_id})"


def _build(provenance: str, factory, *args, upstream: Optional[LazyHandle] = None,
           **kwargs) -> LazyHandle:
    try:
        iop = factory(*args, **kwargs)
    except FusedKernelError as e:
        raise e.attach_provenance(provenance)
    return LazyHandle(iop, provenance, upstream)


# Memory handles

def read(src: Plane) -> LazyHandle:
    return _build("read", op_read_per_thread, src)


def crop(src: Plane, rect: Tuple[int, int, int, int]) -> LazyHandle:
    """rect is (x, y, width, height)"""
    x, y, width, height = rect
    return _build("crop", op_crop, src, x, y, width, height)


def resize(handle_or_src: Union[LazyHandle, Plane], dims: Tuple[int, int],
           mode: Union[ResizeMode, str] = ResizeMode.BILINEAR) -> LazyHandle:
    """
    Resize to dims = (width, height). Given a read or crop handle, the
    resize samples through it and the two become one read op: the
    upstream handle may still be listed in the chain, it is skipped.
    """
    upstream = handle_or_src if isinstance(handle_or_src, LazyHandle) else None
    source = upstream.iop if upstream is not None else handle_or_src
    width, height = dims
    return _build("resize", op_resize, source, width, height, ResizeMode(mode), upstream=upstream)


def split(dest3: Sequence[Plane]) -> LazyHandle:
    return _build("split", op_split_write, dest3)


def write(dest: Plane) -> LazyHandle:
    return _build("write", op_write_per_thread, dest)


# Compute handles

def cvt_color(order: Union[ColorOrder, str] = ColorOrder.SWAP_RB,
              kind: ScalarKind = ScalarKind.F32x3) -> LazyHandle:
    return _build("cvt_color", op_color_convert, order, kind)


def cast(source: ScalarKind, target: ScalarKind) -> LazyHandle:
    return _build("cast", op_cast, source, target)


def multiply(constants, kind: Optional[ScalarKind] = None) -> LazyHandle:
    return _build("multiply", op_mul, constants, kind)


def add(constants, kind: Optional[ScalarKind] = None) -> LazyHandle:
    return _build("add", op_add, constants, kind)


def subtract(constants, kind: Optional[ScalarKind] = None) -> LazyHandle:
    return _build("subtract", op_sub, constants, kind)


def divide(constants, kind: Optional[ScalarKind] = None) -> LazyHandle:
    return _build("divide", op_div, constants, kind)


# Execution

def _is_swap_rb(handle: LazyHandle) -> bool:
    return handle.kind == OpKind.UNARY and isinstance(handle.iop.operation, SwapRB)


def lower_handles(handles: Sequence[LazyHandle]) -> Tuple[List[InstantiableOp], List[int]]:
    """
    IOps for a handle chain plus, per IOp, the index of the handle it came
    from. A read absorbed by the resize that follows it is dropped, and a
    SwapRB directly after the first read becomes a lane-reordering read.
    """
    iops: List[InstantiableOp] = []
    origins: List[int] = []
    index = 0
    while index < len(handles):
        handle = handles[index]
        following = handles[index + 1] if index + 1 < len(handles) else None
        if following is not None and following.upstream is handle:
            index += 1
            continue
        if (not iops and handle.kind == OpKind.READ and following is not None
                and _is_swap_rb(following)
                and following.input_kind == handle.output_kind):
            iops.append(op_reorder_read(handle.iop))
            origins.append(index)
            index += 2
            continue
        iops.append(handle.iop)
        origins.append(index)
        index += 1
    return iops, origins


def _validate(handles: Sequence[LazyHandle]) -> Pipeline:
    iops, origins = lower_handles(handles)
    try:
        return validate_chain(iops)
    except FusedKernelError as e:
        position = getattr(e, 'position', None)
        if position is not None and 0 <= position < len(origins):
            handle_index = origins[position]
            raise e.attach_provenance(handles[handle_index].provenance, handle_index)
        raise


class _CacheNode:
    """One level of the pipeline cache; children are keyed weakly by handle"""
    __slots__ = ('children', 'pipeline')

    def __init__(self):
        self.children: 'weakref.WeakKeyDictionary[LazyHandle, _CacheNode]' = weakref.WeakKeyDictionary()
        self.pipeline: Optional[Pipeline] = None


class LazyExecutor:
    """
    Runs handle chains, validating each distinct chain once. The chain is
    keyed by handle identity, so re-running the same handles skips
    validation and kernel composition. Cache entries hold their handles
    weakly: once any handle of a chain is dropped its pipeline goes too.
    """

    def __init__(self, config: Optional[ExecConfig] = None):
        self.config = config
        self.validations = 0
        self._root = _CacheNode()
        self._lock = threading.Lock()

    def _lookup(self, handles: Sequence[LazyHandle]) -> Optional[Pipeline]:
        node = self._root
        for handle in handles:
            node = node.children.get(handle)
            if node is None:
                return None
        return node.pipeline

    def _store(self, handles: Sequence[LazyHandle], pipeline: Pipeline) -> None:
        node = self._root
        for handle in handles:
            child = node.children.get(handle)
            if child is None:
                child = node.children[handle] = _CacheNode()
            node = child
        node.pipeline = pipeline

    def cached_pipelines(self) -> int:
        """Number of chains whose pipeline is still cached"""
        with self._lock:
            pending = [self._root]
            count = 0
            while pending:
                node = pending.pop()
                count += node.pipeline is not None
                pending.extend(node.children.values())
            return count

    def pipeline(self, handles: Sequence[LazyHandle]) -> Pipeline:
        key = tuple(handles)
        with self._lock:
            pipeline = self._lookup(key)
        if pipeline is None:
            pipeline = _validate(key)
            with self._lock:
                self._store(key, pipeline)
                self.validations += 1
            logger.info(
                f"Built pipeline of {len(pipeline.iops)} IOps from {len(key)} handles "
                f"over {pipeline.iter_space}"
            )
        return pipeline

    def execute(self, handles: Sequence[LazyHandle], config: Optional[ExecConfig] = None) -> ExecReport:
        pipeline = self.pipeline(handles)
        return execute_fused(pipeline, config or self.config or get_config())

    def execute_unfused(self, handles: Sequence[LazyHandle],
                        config: Optional[ExecConfig] = None) -> ExecReport:
        """The same chain on the multi-pass baseline"""
        pipeline = self.pipeline(handles)
        return execute_unfused(pipeline.iops, config or self.config or get_config())

    def clear(self) -> None:
        with self._lock:
            self._root = _CacheNode()


default_executor = LazyExecutor()


def execute_operations(handles: Sequence[LazyHandle],
                       config: Optional[ExecConfig] = None) -> ExecReport:
    return default_executor.execute(handles, config)


def _lower_plane_chain(index: int, chain: Sequence[LazyHandle]) -> Tuple[InstantiableOp, InstantiableOp]:
    iops, _ = lower_handles(chain)
    if len(iops) != 2 or iops[0].kind != OpKind.READ or iops[1].kind != OpKind.WRITE:
        raise HeterogeneousBatchError(
            index, f"chain must lower to one read and one write, got {[iop.op_id for iop in iops]}"
        )
    return iops[0], iops[1]


def _check_against(index: int, plane: Tuple[InstantiableOp, InstantiableOp],
                   reference: Tuple[InstantiableOp, InstantiableOp]) -> None:
    (read_iop, write_iop), (first_read, first_write) = plane, reference
    checks = (
        ("read kind", read_iop.signature.output_kind, first_read.signature.output_kind),
        ("read extent", read_iop.dims_hint, first_read.dims_hint),
        ("write kind", write_iop.signature.input_kind, first_write.signature.input_kind),
        ("write extent", write_iop.dims_hint, first_write.dims_hint),
    )
    for label, found, expected in checks:
        if found != expected:
            raise HeterogeneousBatchError(index, f"{label} {found} differs from plane #0 ({expected})")


def build_batch(per_plane_handles: Sequence[Sequence[LazyHandle]],
                shared_compute: Sequence[LazyHandle],
                batch_size: Optional[int] = None) -> Pipeline:
    """
    Wrap per-plane handle chains into BatchRead / BatchWrite around the
    shared compute handles. Each plane chain must lower to a single read
    and a single write, e.g. [read, write] or [crop, resize(crop), write].
    batch_size beyond the number of planes adds inactive planes.
    """
    if not per_plane_handles:
        raise HeterogeneousBatchError(0, "batch has no planes")
    lowered = [_lower_plane_chain(index, chain) for index, chain in enumerate(per_plane_handles)]
    for index, plane in enumerate(lowered[1:], start=1):
        _check_against(index, plane, lowered[0])

    reads = [read_iop for read_iop, _ in lowered]
    writes = [write_iop for _, write_iop in lowered]
    batch_read = LazyHandle(op_batch_read(reads, batch_size=batch_size), "batch read")
    batch_write = LazyHandle(op_batch_write(writes, batch_size=batch_size), "batch write")
    return _validate([batch_read, *shared_compute, batch_write])


def execute_batch(per_plane_handles: Sequence[Sequence[LazyHandle]],
                  shared_compute: Sequence[LazyHandle],
                  config: Optional[ExecConfig] = None,
                  batch_size: Optional[int] = None) -> ExecReport:
    """One fused execution over every plane of the batch"""
    pipeline = build_batch(per_plane_handles, shared_compute, batch_size)
    logger.info(f"Executing batch of {len(per_plane_handles)} planes over {pipeline.iter_space}")
    return execute_fused(pipeline, config or get_config())
