"""
Memory operations: the Read and Write archetypes

Read ops map a ThreadPoint (or a tile of them) to source locations;
Write ops map it to destination locations. Batch variants select the
per-plane parameters by the z coordinate.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from fusedkernel.errors import (
    CropOutOfBoundsError, EmptyBatchError, InnerKindMismatchError, ParamsError,
    PlaneExtentMismatchError, UnsupportedKindError,
)
from fusedkernel.ops.cast import convert_values
from fusedkernel.ops.core import (
    InstantiableOp, OpKind, ReadOperation, WriteOperation, instantiate,
)
from fusedkernel.tensor.accounting import element_reads
from fusedkernel.tensor.plane import Plane, ThreadPoint
from fusedkernel.tensor.scalar_kind import ScalarKind


# Per-thread read / write

@dataclass(frozen=True, eq=False)
class PlaneParams:
    plane: Plane


class PerThreadRead(ReadOperation):
    params_type = PlaneParams

    def __init__(self, kind: ScalarKind):
        super().__init__(f"per_thread_read_{kind}", kind)

    def dims(self, params: PlaneParams):
        return params.plane.width, params.plane.height, 1

    def source_plane(self, params: PlaneParams) -> Plane:
        return params.plane

    def read(self, thread: ThreadPoint, params: PlaneParams):
        element_reads.add(1)
        value = params.plane.array()[thread.y, thread.x]
        return np.array(value, copy=True) if self.output_kind.is_packed else value

    def read_tile(self, params: PlaneParams, z, y0, y1, x0, x1):
        element_reads.add((y1 - y0) * (x1 - x0))
        return np.array(params.plane.array()[y0:y1, x0:x1], copy=True)


class PerThreadWrite(WriteOperation):
    params_type = PlaneParams

    def __init__(self, kind: ScalarKind):
        super().__init__(f"per_thread_write_{kind}", kind)

    def dims(self, params: PlaneParams):
        return params.plane.width, params.plane.height, 1

    def write(self, thread: ThreadPoint, value, params: PlaneParams) -> None:
        params.plane.array()[thread.y, thread.x] = value

    def write_tile(self, params: PlaneParams, z, y0, y1, x0, x1, values) -> None:
        params.plane.array()[y0:y1, x0:x1] = values


def op_read_per_thread(source: Plane) -> InstantiableOp:
    return instantiate(PerThreadRead(source.kind), PlaneParams(source))


def op_write_per_thread(dest: Plane) -> InstantiableOp:
    return instantiate(PerThreadWrite(dest.kind), PlaneParams(dest))


# Crop

@dataclass(frozen=True, eq=False)
class CropParams:
    source: Plane
    x0: int
    y0: int
    out_w: int
    out_h: int
    view: Plane = field(init=False, repr=False)

    def __post_init__(self):
        if (self.x0 < 0 or self.y0 < 0 or self.out_w < 1 or self.out_h < 1
                or self.x0 + self.out_w > self.source.width
                or self.y0 + self.out_h > self.source.height):
            raise CropOutOfBoundsError(
                f"Crop ({self.x0}, {self.y0}, {self.out_w}x{self.out_h}) exceeds "
                f"{self.source.width}x{self.source.height} source"
            )
        object.__setattr__(self, 'view', self.source.region(self.x0, self.y0, self.out_w, self.out_h))


class Crop(PerThreadRead):
    """Per-thread read through a zero-copy region view"""
    params_type = CropParams

    def __init__(self, kind: ScalarKind):
        ReadOperation.__init__(self, f"crop_{kind}", kind)

    def dims(self, params: CropParams):
        return params.out_w, params.out_h, 1

    def source_plane(self, params: CropParams) -> Plane:
        return params.view

    def read(self, thread: ThreadPoint, params: CropParams):
        return PerThreadRead.read(self, thread, PlaneParams(params.view))

    def read_tile(self, params: CropParams, z, y0, y1, x0, x1):
        element_reads.add((y1 - y0) * (x1 - x0))
        return np.array(params.view.array()[y0:y1, x0:x1], copy=True)


def op_crop(source: Plane, x0: int, y0: int, out_w: int, out_h: int) -> InstantiableOp:
    return instantiate(Crop(source.kind), CropParams(source, x0, y0, out_w, out_h))


# Resize

class ResizeMode(Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


@dataclass(frozen=True, eq=False)
class ResizeParams:
    source: Plane
    target_w: int
    target_h: int
    mode: ResizeMode = ResizeMode.BILINEAR

    def __post_init__(self):
        if self.target_w < 1 or self.target_h < 1:
            raise ParamsError(f"Resize target must be at least 1x1, got {self.target_w}x{self.target_h}")
        object.__setattr__(self, 'mode', ResizeMode(self.mode))


def _nearest_index(coords: np.ndarray, source_extent: int, target_extent: int) -> np.ndarray:
    index = np.floor((coords + 0.5) * source_extent / target_extent).astype(np.intp)
    return np.minimum(index, source_extent - 1)


def _bilinear_axis(coords: np.ndarray, source_extent: int, target_extent: int):
    position = (coords + 0.5) * source_extent / target_extent - 0.5
    position = np.clip(position, 0.0, source_extent - 1)
    low = np.floor(position).astype(np.intp)
    high = np.minimum(low + 1, source_extent - 1)
    return low, high, position - low


def resize_sample(params: ResizeParams, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """
    Sample the source at output rows `ys` x columns `xs` using half-pixel
    centres. Bilinear blends in float64 as two lerps along x then one along y.
    """
    source = params.source
    values = source.array()
    sw, sh = source.width, source.height
    tw, th = params.target_w, params.target_h
    kind = source.kind

    if params.mode == ResizeMode.NEAREST:
        rows = _nearest_index(ys.astype(np.float64), sh, th)
        cols = _nearest_index(xs.astype(np.float64), sw, tw)
        return np.array(values[rows[:, None], cols[None, :]], copy=True)

    y_low, y_high, wy = _bilinear_axis(ys.astype(np.float64), sh, th)
    x_low, x_high, wx = _bilinear_axis(xs.astype(np.float64), sw, tw)
    wy = wy[:, None]
    wx = wx[None, :]
    if kind.is_packed:
        wy = wy[..., None]
        wx = wx[..., None]

    def gather(rows, cols):
        return values[rows[:, None], cols[None, :]].astype(np.float64)

    top = gather(y_low, x_low) * (1.0 - wx) + gather(y_low, x_high) * wx
    bottom = gather(y_high, x_low) * (1.0 - wx) + gather(y_high, x_high) * wx
    blended = top * (1.0 - wy) + bottom * wy
    return convert_values(blended, kind)


class Resize(ReadOperation):
    params_type = ResizeParams

    def __init__(self, kind: ScalarKind):
        super().__init__(f"resize_{kind}", kind)

    def dims(self, params: ResizeParams):
        return params.target_w, params.target_h, 1

    def _taps(self, params: ResizeParams) -> int:
        return 1 if params.mode == ResizeMode.NEAREST else 4

    def read(self, thread: ThreadPoint, params: ResizeParams):
        element_reads.add(self._taps(params))
        sample = resize_sample(params, np.array([thread.y]), np.array([thread.x]))
        value = sample[0, 0]
        return np.array(value, copy=True) if self.output_kind.is_packed else value

    def read_tile(self, params: ResizeParams, z, y0, y1, x0, x1):
        element_reads.add((y1 - y0) * (x1 - x0) * self._taps(params))
        return resize_sample(params, np.arange(y0, y1), np.arange(x0, x1))

    def read_bytes(self, params: ResizeParams, z: int) -> int:
        return self._taps(params) * self.output_kind.byte_width


def op_resize(source: Union[Plane, InstantiableOp], target_w: int, target_h: int,
              mode=ResizeMode.BILINEAR) -> InstantiableOp:
    """
    Resize a plane, or sample through a per-thread read / crop IOp so that
    Crop -> Resize runs as a single read with no materialised crop.
    """
    if isinstance(source, InstantiableOp):
        operation = source.operation
        if not hasattr(operation, 'source_plane'):
            raise ParamsError(f"Resize cannot sample through {source.op_id}")
        source = operation.source_plane(source.params)
    params = ResizeParams(source, target_w, target_h, mode)
    return instantiate(Resize(source.kind), params)


# Channel reordering read

@dataclass(frozen=True, eq=False)
class ReorderParams:
    inner: InstantiableOp
    order: Tuple[int, int, int] = (2, 1, 0)

    def __post_init__(self):
        if self.inner.kind != OpKind.READ:
            raise ParamsError(f"Reorder needs a ReadType inner op, got {self.inner.kind}")
        if not self.inner.signature.output_kind.is_packed:
            raise UnsupportedKindError(f"Reorder needs a three-lane kind, got {self.inner.signature.output_kind}")
        if sorted(self.order) != [0, 1, 2]:
            raise ParamsError(f"Lane order must be a permutation of (0, 1, 2), got {self.order}")
        object.__setattr__(self, 'order', tuple(self.order))


class ReorderRead(ReadOperation):
    """Read whose lanes are fetched in a permuted order"""
    params_type = ReorderParams

    def __init__(self, kind: ScalarKind):
        super().__init__(f"reorder_read_{kind}", kind)

    def dims(self, params: ReorderParams):
        return params.inner.dims_hint

    def read(self, thread: ThreadPoint, params: ReorderParams):
        value = params.inner.operation.read(thread, params.inner.params)
        return np.array(value[list(params.order)], copy=True)

    def read_tile(self, params: ReorderParams, z, y0, y1, x0, x1):
        values = params.inner.operation.read_tile(params.inner.params, z, y0, y1, x0, x1)
        return np.ascontiguousarray(values[..., list(params.order)])

    def read_bytes(self, params: ReorderParams, z: int) -> int:
        return params.inner.operation.read_bytes(params.inner.params, z)


def op_reorder_read(inner: InstantiableOp, order=(2, 1, 0)) -> InstantiableOp:
    params = ReorderParams(inner, tuple(order))
    return instantiate(ReorderRead(inner.signature.output_kind), params)


# Split

@dataclass(frozen=True, eq=False)
class SplitParams:
    planes: Tuple[Plane, Plane, Plane]

    def __post_init__(self):
        if len(self.planes) != 3:
            raise ParamsError(f"Split needs exactly 3 destination planes, got {len(self.planes)}")
        first = self.planes[0]
        for index, plane in enumerate(self.planes):
            if plane.kind.is_packed or plane.kind != first.kind:
                raise UnsupportedKindError(
                    f"Split plane #{index} is {plane.kind}; planes must share one scalar kind"
                )
            if plane.dims != first.dims:
                raise PlaneExtentMismatchError(
                    f"Split plane #{index} is {plane.width}x{plane.height}, "
                    f"plane #0 is {first.width}x{first.height}"
                )
        object.__setattr__(self, 'planes', tuple(self.planes))


class SplitWrite(WriteOperation):
    """Packed three-lane elements stored as three planar images"""
    params_type = SplitParams

    def __init__(self, lane_kind: ScalarKind):
        super().__init__(f"split_write_{lane_kind.packed_kind}", lane_kind.packed_kind)

    def dims(self, params: SplitParams):
        width, height = params.planes[0].dims
        return width, height, 1

    def write(self, thread: ThreadPoint, value, params: SplitParams) -> None:
        for lane, plane in enumerate(params.planes):
            plane.array()[thread.y, thread.x] = value[lane]

    def write_tile(self, params: SplitParams, z, y0, y1, x0, x1, values) -> None:
        for lane, plane in enumerate(params.planes):
            plane.array()[y0:y1, x0:x1] = values[..., lane]


def op_split_write(dest: Sequence[Plane]) -> InstantiableOp:
    params = SplitParams(tuple(dest))
    return instantiate(SplitWrite(params.planes[0].kind), params)


# Batch read / write

@dataclass(frozen=True, eq=False)
class BatchParams:
    """
    Per-plane inner IOps indexed by z. Planes at z >= active_count are
    inactive: reads return default_value and writes are skipped.
    """
    inner: Tuple[InstantiableOp, ...]
    active_count: int
    default_value: object = None

    def __post_init__(self):
        if not self.inner:
            raise EmptyBatchError("Batch needs at least one inner op")
        if not 1 <= self.active_count <= len(self.inner):
            raise ParamsError(
                f"active_count must be in [1, {len(self.inner)}], got {self.active_count}"
            )
        object.__setattr__(self, 'inner', tuple(self.inner))

    @property
    def size(self) -> int:
        return len(self.inner)


def _check_uniform(inner: Sequence[InstantiableOp], expected: OpKind, kind_side: str):
    first = inner[0]
    if first.kind != expected:
        raise ParamsError(f"Batch inner ops must be {expected}, got {first.kind}")
    first_kind = getattr(first.signature, kind_side)
    for index, iop in enumerate(inner):
        if iop.kind != expected:
            raise ParamsError(f"Batch inner op #{index} is {iop.kind}, not {expected}")
        if getattr(iop.signature, kind_side) != first_kind:
            raise InnerKindMismatchError(
                f"Batch inner op #{index} handles {getattr(iop.signature, kind_side)}, "
                f"op #0 handles {first_kind}"
            )
        if iop.dims_hint is None or iop.dims_hint[:2] != first.dims_hint[:2] or iop.dims_hint[2] != 1:
            raise PlaneExtentMismatchError(
                f"Batch inner op #{index} covers {iop.dims_hint}, op #0 covers {first.dims_hint}"
            )
    return first_kind


def _batch_members(inner, active_count, batch_size):
    inner = tuple(inner)
    if not inner:
        raise EmptyBatchError("Batch needs at least one inner op")
    if active_count is None:
        active_count = len(inner)
    if batch_size is not None:
        if batch_size < len(inner):
            raise ParamsError(f"batch_size {batch_size} is smaller than {len(inner)} inner ops")
        # padding entries sit at z >= active_count and are never executed
        inner = inner + (inner[-1],) * (batch_size - len(inner))
    return inner, active_count


class BatchRead(ReadOperation):
    params_type = BatchParams

    def __init__(self, kind: ScalarKind):
        super().__init__(f"batch_read_{kind}", kind)

    def dims(self, params: BatchParams):
        width, height, _ = params.inner[0].dims_hint
        return width, height, params.size

    def read(self, thread: ThreadPoint, params: BatchParams):
        if thread.z >= params.active_count:
            return np.array(params.default_value, copy=True) if self.output_kind.is_packed \
                else params.default_value
        inner = params.inner[thread.z]
        return inner.operation.read(ThreadPoint(thread.x, thread.y, 0), inner.params)

    def read_tile(self, params: BatchParams, z, y0, y1, x0, x1):
        if z >= params.active_count:
            shape = (y1 - y0, x1 - x0) + self.output_kind.element_shape()
            return np.full(shape, params.default_value, dtype=self.output_kind.dtype)
        inner = params.inner[z]
        return inner.operation.read_tile(inner.params, 0, y0, y1, x0, x1)

    def read_bytes(self, params: BatchParams, z: int) -> int:
        if z >= params.active_count:
            return 0
        inner = params.inner[z]
        return inner.operation.read_bytes(inner.params, 0)


class BatchWrite(WriteOperation):
    params_type = BatchParams

    def __init__(self, kind: ScalarKind):
        super().__init__(f"batch_write_{kind}", kind)

    def dims(self, params: BatchParams):
        width, height, _ = params.inner[0].dims_hint
        return width, height, params.size

    def write(self, thread: ThreadPoint, value, params: BatchParams) -> None:
        if thread.z >= params.active_count:
            return
        inner = params.inner[thread.z]
        inner.operation.write(ThreadPoint(thread.x, thread.y, 0), value, inner.params)

    def write_tile(self, params: BatchParams, z, y0, y1, x0, x1, values) -> None:
        if z >= params.active_count:
            return
        inner = params.inner[z]
        inner.operation.write_tile(inner.params, 0, y0, y1, x0, x1, values)

    def write_bytes(self, params: BatchParams, z: int) -> int:
        if z >= params.active_count:
            return 0
        inner = params.inner[z]
        return inner.operation.write_bytes(inner.params, 0)


def op_batch_read(inner: Sequence[InstantiableOp], active_count: Optional[int] = None,
                  default_value=None, batch_size: Optional[int] = None) -> InstantiableOp:
    """
    Horizontal fusion over per-plane reads. `batch_size` larger than the
    number of inner ops leaves the extra planes inactive.
    """
    inner, active_count = _batch_members(inner, active_count, batch_size)
    kind = _check_uniform(inner, OpKind.READ, 'output_kind')
    default = kind.make_value(0 if default_value is None else default_value)
    return instantiate(BatchRead(kind), BatchParams(inner, active_count, default))


def op_batch_write(inner: Sequence[InstantiableOp], active_count: Optional[int] = None,
                   batch_size: Optional[int] = None) -> InstantiableOp:
    inner, active_count = _batch_members(inner, active_count, batch_size)
    kind = _check_uniform(inner, OpKind.WRITE, 'input_kind')
    return instantiate(BatchWrite(kind), BatchParams(inner, active_count))
