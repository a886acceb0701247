"""
FKT tensor container and PPM export

Layout (little-endian): magic b"FKT1", u32 plane_count, then for each plane
u32 kind_tag, u32 width, u32 height and width*height row-major elements.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from fusedkernel.errors import (
    BadExtentsError, BadMagicError, TruncatedPayloadError, UnknownKindError, UnsupportedKindError,
)
from fusedkernel.tensor.plane import Plane, PlaneBatch, plane_alloc
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)

MAGIC = b"FKT1"
_FILE_HEADER = struct.Struct('<4sI')
_PLANE_HEADER = struct.Struct('<III')

PathLike = Union[str, Path]


def payload_nbytes(plane: Plane) -> int:
    """Bytes the FKT payload of this plane occupies"""
    return plane.width * plane.height * plane.kind.byte_width


def encode_plane_header(plane: Plane) -> bytes:
    return _PLANE_HEADER.pack(plane.kind.value, plane.width, plane.height)


def tensor_write_file(data: Union[Plane, PlaneBatch], path: PathLike) -> int:
    """Write a plane or batch; returns the number of bytes written"""
    planes = [data] if isinstance(data, Plane) else list(data)
    chunks = [_FILE_HEADER.pack(MAGIC, len(planes))]
    for plane in planes:
        little = plane.kind.dtype.newbyteorder('<')
        chunks.append(encode_plane_header(plane))
        chunks.append(plane.to_array().astype(little, copy=False).tobytes())

    blob = b''.join(chunks)
    Path(path).write_bytes(blob)
    logger.info(f"Wrote {len(planes)} plane(s), {len(blob)} bytes to {path}")
    return len(blob)


def tensor_read_file(path: PathLike) -> PlaneBatch:
    blob = Path(path).read_bytes()
    if len(blob) < _FILE_HEADER.size:
        raise TruncatedPayloadError(f"{path}: file shorter than header")
    magic, plane_count = _FILE_HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")

    cursor = _FILE_HEADER.size
    planes = []
    for index in range(plane_count):
        if len(blob) < cursor + _PLANE_HEADER.size:
            raise TruncatedPayloadError(f"{path}: plane #{index} header truncated")
        tag, width, height = _PLANE_HEADER.unpack_from(blob, cursor)
        cursor += _PLANE_HEADER.size

        kind = ScalarKind.from_tag(tag)
        if kind is None:
            raise UnknownKindError(f"{path}: plane #{index} has unknown kind tag {tag}")
        if width < 1 or height < 1:
            raise BadExtentsError(f"{path}: plane #{index} declares extents {width}x{height}")

        size = width * height * kind.byte_width
        if len(blob) < cursor + size:
            raise TruncatedPayloadError(
                f"{path}: plane #{index} declares {size} payload bytes, "
                f"{len(blob) - cursor} available"
            )
        little = kind.dtype.newbyteorder('<')
        values = np.frombuffer(blob, dtype=little, count=width * height * kind.lanes, offset=cursor)
        cursor += size

        plane = plane_alloc(width, height, kind)
        plane.array()[...] = values.reshape((height, width) + kind.element_shape())
        planes.append(plane)

    return PlaneBatch.from_planes(planes)


def write_ppm(plane: Plane, path: PathLike) -> None:
    """Binary PPM (P6) export of a U8x3 plane"""
    if plane.kind != ScalarKind.U8x3:
        raise UnsupportedKindError(f"PPM export needs U8x3, got {plane.kind}")
    header = f"P6\n{plane.width} {plane.height}\n255\n".encode('ascii')
    Path(path).write_bytes(header + plane.to_array().tobytes())
    logger.info(f"Wrote PPM {plane.width}x{plane.height} to {path}")
