"""
Element value vocabulary shared by every operation
"""

from enum import Enum
from typing import Optional

import numpy as np


class ScalarKind(Enum):
    """Element kind tag; the integer value is the FKT on-disk tag"""
    U8 = 0
    F32 = 1
    F64 = 2
    U8x3 = 3
    F32x3 = 4
    F64x3 = 5

    @property
    def lanes(self) -> int:
        return 3 if self.value >= 3 else 1

    @property
    def is_packed(self) -> bool:
        return self.lanes == 3

    @property
    def dtype(self) -> np.dtype:
        """numpy dtype of one lane"""
        return _LANE_DTYPES[self.value % 3]

    @property
    def byte_width(self) -> int:
        return self.dtype.itemsize * self.lanes

    @property
    def is_float(self) -> bool:
        return self.dtype.kind == 'f'

    @property
    def lane_kind(self) -> 'ScalarKind':
        """Scalar kind of a single lane (U8x3 -> U8)"""
        return ScalarKind(self.value % 3)

    @property
    def packed_kind(self) -> 'ScalarKind':
        """Three-lane kind built from this kind's lane (F32 -> F32x3)"""
        return ScalarKind(self.value % 3 + 3)

    @classmethod
    def from_tag(cls, tag: int) -> Optional['ScalarKind']:
        try:
            return cls(tag)
        except ValueError:
            return None

    @classmethod
    def from_dtype(cls, dtype, lanes: int = 1) -> 'ScalarKind':
        dtype = np.dtype(dtype)
        for index, lane_dtype in enumerate(_LANE_DTYPES):
            if lane_dtype == dtype:
                return cls(index + (3 if lanes == 3 else 0))
        raise ValueError(f"No ScalarKind for dtype {dtype} with {lanes} lanes")

    def element_shape(self) -> tuple:
        """Trailing array shape of one element"""
        return (3,) if self.is_packed else ()

    def make_value(self, value):
        """Coerce a python number or 3-sequence into an element value of this kind"""
        if self.is_packed:
            lanes = np.broadcast_to(np.asarray(value, dtype=self.dtype), (3,))
            return np.array(lanes, dtype=self.dtype)
        return self.dtype.type(value)

    def __str__(self) -> str:
        return self.name


_LANE_DTYPES = (np.dtype(np.uint8), np.dtype(np.float32), np.dtype(np.float64))
