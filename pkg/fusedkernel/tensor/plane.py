"""
Strided 2D planes over contiguous buffers, plane batches and thread points
"""

import sys
import weakref
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from fusedkernel.errors import CapacityOverflowError, PlaneBoundsError
from fusedkernel.tensor.accounting import memory_ledger
from fusedkernel.tensor.scalar_kind import ScalarKind


class ThreadPoint(NamedTuple):
    """Logical coordinates of one unit of data-parallel work; z selects the batch plane"""
    x: int
    y: int
    z: int = 0


class Plane:
    """
    Row-major 2D view of `width` x `height` elements inside a 1-D buffer.

    Element (x, y) lives at element index `offset + y * row_stride + x` of the
    buffer. A packed kind stores its three lanes contiguously per element.
    Views created with `region` share the buffer, so a crop never copies.
    """

    def __init__(self, buffer: np.ndarray, width: int, height: int, kind: ScalarKind,
                 row_stride: Optional[int] = None, offset: int = 0):
        if row_stride is None:
            row_stride = width
        if width < 1 or height < 1:
            raise ValueError(f"Plane extents must be positive, got {width}x{height}")
        if row_stride < width:
            raise ValueError(f"row_stride {row_stride} is smaller than width {width}")
        if buffer.ndim != 1 or buffer.dtype != kind.dtype:
            raise ValueError(f"Buffer must be 1-D {kind.dtype}, got {buffer.ndim}-D {buffer.dtype}")
        if not buffer.flags.c_contiguous:
            raise ValueError("Buffer must be contiguous")
        capacity = buffer.size // kind.lanes
        needed = offset + row_stride * (height - 1) + width
        if offset < 0 or capacity < needed:
            raise PlaneBoundsError(
                f"Buffer holds {capacity} elements, plane needs {needed}"
            )

        self.buffer = buffer
        self.width = width
        self.height = height
        self.kind = kind
        self.row_stride = row_stride
        self.offset = offset

        itemsize = kind.dtype.itemsize
        element_bytes = kind.byte_width
        shape = (height, width) + kind.element_shape()
        strides = (row_stride * element_bytes, element_bytes) + ((itemsize,) if kind.is_packed else ())
        base = buffer[offset * kind.lanes:]
        self._view = np.lib.stride_tricks.as_strided(base, shape=shape, strides=strides)

    @property
    def dims(self) -> Tuple[int, int]:
        return self.width, self.height

    @property
    def nbytes(self) -> int:
        """Bytes spanned by the plane's rows, stride padding included"""
        return self.row_stride * self.height * self.kind.byte_width

    def array(self) -> np.ndarray:
        """Writable strided numpy view of the plane contents"""
        return self._view

    def to_array(self) -> np.ndarray:
        """Contiguous copy of the plane contents"""
        return np.array(self._view, copy=True)

    def region(self, x0: int, y0: int, width: int, height: int) -> 'Plane':
        """Zero-copy view of a sub-rectangle"""
        if x0 < 0 or y0 < 0 or x0 + width > self.width or y0 + height > self.height:
            raise PlaneBoundsError(
                f"Region ({x0}, {y0}, {width}x{height}) exceeds {self.width}x{self.height} plane"
            )
        return Plane(self.buffer, width, height, self.kind,
                     row_stride=self.row_stride,
                     offset=self.offset + y0 * self.row_stride + x0)

    def with_stride(self, row_stride: int) -> 'Plane':
        """Copy of this plane re-embedded in a freshly allocated buffer with a larger stride"""
        copy = _alloc_buffer(row_stride * self.height, self.kind)
        plane = Plane(copy, self.width, self.height, self.kind, row_stride=row_stride)
        plane.array()[...] = self._view
        return plane

    def same_contents(self, other: 'Plane') -> bool:
        """Bitwise equality of logical contents (NaN payloads included)"""
        return (self.kind == other.kind and self.dims == other.dims
                and self.to_array().tobytes() == other.to_array().tobytes())

    @classmethod
    def from_array(cls, values: np.ndarray, kind: Optional[ScalarKind] = None) -> 'Plane':
        """Allocate a plane and copy `values` (shape (h, w) or (h, w, 3)) into it"""
        values = np.asarray(values)
        if kind is None:
            lanes = 3 if values.ndim == 3 else 1
            kind = ScalarKind.from_dtype(values.dtype, lanes)
        if values.shape[2:] != kind.element_shape() or values.ndim < 2:
            raise ValueError(f"Array of shape {values.shape} does not hold {kind} elements")
        height, width = values.shape[:2]
        plane = plane_alloc(width, height, kind)
        plane.array()[...] = values.astype(kind.dtype, copy=False)
        return plane

    def __repr__(self) -> str:
        return (f"Plane({self.width}x{self.height} {self.kind}, "
                f"stride={self.row_stride}, offset={self.offset})")


@dataclass(frozen=True)
class PlaneBatch:
    """Non-empty ordered planes of one element kind"""
    planes: Tuple[Plane, ...]

    def __post_init__(self):
        if not self.planes:
            raise ValueError("PlaneBatch must contain at least one plane")
        kind = self.planes[0].kind
        for index, plane in enumerate(self.planes):
            if plane.kind != kind:
                raise ValueError(f"Plane #{index} is {plane.kind}, batch is {kind}")

    @classmethod
    def from_planes(cls, planes: Sequence[Plane]) -> 'PlaneBatch':
        return cls(tuple(planes))

    @property
    def kind(self) -> ScalarKind:
        return self.planes[0].kind

    @property
    def uniform_dims(self) -> Optional[Tuple[int, int]]:
        dims = {plane.dims for plane in self.planes}
        return dims.pop() if len(dims) == 1 else None

    def __len__(self) -> int:
        return len(self.planes)

    def __getitem__(self, index: int) -> Plane:
        return self.planes[index]

    def __iter__(self) -> Iterator[Plane]:
        return iter(self.planes)


def _alloc_buffer(elements: int, kind: ScalarKind) -> np.ndarray:
    nbytes = elements * kind.byte_width
    if nbytes > sys.maxsize or nbytes > np.iinfo(np.intp).max:
        raise CapacityOverflowError(f"{nbytes} bytes exceeds addressable memory")
    try:
        buffer = np.zeros(elements * kind.lanes, dtype=kind.dtype)
    except (MemoryError, ValueError) as e:
        raise CapacityOverflowError(f"Cannot allocate {nbytes} bytes: {e}") from e
    memory_ledger.record(nbytes)
    weakref.finalize(buffer, memory_ledger.release, nbytes)
    return buffer


def plane_alloc(width: int, height: int, kind: ScalarKind) -> Plane:
    """Zero-initialised plane with row_stride == width"""
    if width < 1 or height < 1:
        raise ValueError(f"Plane extents must be positive, got {width}x{height}")
    return Plane(_alloc_buffer(width * height, kind), width, height, kind)


def batch_alloc(width: int, height: int, kind: ScalarKind, count: int) -> PlaneBatch:
    return PlaneBatch(tuple(plane_alloc(width, height, kind) for _ in range(count)))


def _check_bounds(plane: Plane, x: int, y: int) -> None:
    if not (0 <= x < plane.width and 0 <= y < plane.height):
        raise PlaneBoundsError(f"({x}, {y}) outside {plane.width}x{plane.height} plane")


def plane_get(plane: Plane, x: int, y: int):
    """Element at (x, y): a numpy scalar, or a (3,) array for packed kinds"""
    _check_bounds(plane, x, y)
    value = plane.array()[y, x]
    return np.array(value, copy=True) if plane.kind.is_packed else value


def plane_set(plane: Plane, x: int, y: int, value) -> None:
    _check_bounds(plane, x, y)
    plane.array()[y, x] = value
