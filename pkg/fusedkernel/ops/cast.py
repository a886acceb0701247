"""
Cast Unary operation between lane types
"""

import numpy as np

from fusedkernel.errors import UnsupportedCastError
from fusedkernel.ops.core import InstantiableOp, UnaryOperation, instantiate
from fusedkernel.tensor.scalar_kind import ScalarKind


def convert_values(values, target: ScalarKind):
    """
    Convert elements to the lane type of `target`. Widening is exact,
    float narrowing rounds to nearest, and float -> u8 maps NaN to 0,
    rounds half to even and clamps to [0, 255].
    """
    array = np.asarray(values)
    if target.is_float or array.dtype.kind != 'f':
        result = array.astype(target.dtype)
    else:
        cleaned = np.where(np.isnan(array), 0, array)
        result = np.clip(np.rint(cleaned), 0, 255).astype(target.dtype)
    return result[()] if result.ndim == 0 else result


class Cast(UnaryOperation):
    def __init__(self, source: ScalarKind, target: ScalarKind):
        super().__init__(f"cast_{source}_{target}", source, target)

    def exec(self, value, params=None):
        return convert_values(value, self.output_kind)

    def bind(self, params=None):
        target = self.output_kind
        return lambda values: convert_values(values, target)


def op_cast(source: ScalarKind, target: ScalarKind) -> InstantiableOp:
    """Lane-preserving conversion; U8/F32/F64 lanes convert freely in both directions"""
    if source.lanes != target.lanes:
        raise UnsupportedCastError(f"Cast {source} -> {target} changes the lane count")
    return instantiate(Cast(source, target))
