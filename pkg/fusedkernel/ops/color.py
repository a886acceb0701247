"""
Colour conversion Unary operations on three-lane kinds
"""

from enum import Enum

import numpy as np

from fusedkernel.errors import UnsupportedKindError
from fusedkernel.ops.core import InstantiableOp, UnaryOperation, instantiate
from fusedkernel.tensor.scalar_kind import ScalarKind

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class ColorOrder(Enum):
    SWAP_RB = "SwapRB"
    TO_GRAY_F32 = "ToGrayF32"


class SwapRB(UnaryOperation):
    """Lane permutation (2, 1, 0)"""

    def __init__(self, kind: ScalarKind):
        super().__init__(f"swap_rb_{kind}", kind, kind)

    def exec(self, value, params=None):
        return np.array(value[..., ::-1], copy=True)

    def bind(self, params=None):
        return lambda values: values[..., ::-1]


class ToGrayF32(UnaryOperation):
    """Weighted lane sum computed in float64, stored as F32"""

    def __init__(self, kind: ScalarKind):
        super().__init__(f"to_gray_f32_{kind}", kind, ScalarKind.F32)

    def exec(self, value, params=None):
        lanes = np.asarray(value, dtype=np.float64)
        gray = (lanes[..., 0] * GRAY_WEIGHTS[0]
                + lanes[..., 1] * GRAY_WEIGHTS[1]
                + lanes[..., 2] * GRAY_WEIGHTS[2]).astype(np.float32)
        return gray[()] if gray.ndim == 0 else gray


def op_color_convert(order, kind: ScalarKind = ScalarKind.F32x3) -> InstantiableOp:
    order = ColorOrder(order)
    if not kind.is_packed:
        raise UnsupportedKindError(f"{order.value} needs a three-lane kind, got {kind}")
    if order == ColorOrder.SWAP_RB:
        return instantiate(SwapRB(kind))
    return instantiate(ToGrayF32(kind))
