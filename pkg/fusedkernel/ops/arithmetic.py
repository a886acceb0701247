"""
Element-wise arithmetic Binary operations: Mul, Add, Sub, Div
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from fusedkernel.errors import DivByZeroParamError, ParamsError
from fusedkernel.ops.core import ComputeOperation, InstantiableOp, instantiate
from fusedkernel.tensor.scalar_kind import ScalarKind


def _check_integral(constants, kind: ScalarKind) -> None:
    raw = np.asarray(constants)
    if raw.dtype.kind not in "iuf":
        raise ParamsError(f"{kind} constants must be numbers, got {constants!r}")
    limits = np.iinfo(kind.dtype)
    if not np.all(np.isfinite(raw)) or np.any(raw != np.floor(raw)):
        raise ParamsError(f"{kind} constants must be whole numbers, got {constants!r}")
    if np.any(raw < limits.min) or np.any(raw > limits.max):
        raise ParamsError(f"{kind} constants must lie in [{limits.min}, {limits.max}], got {constants!r}")


@dataclass(frozen=True, eq=False)
class ArithParams:
    """Per-lane constants stored in the element kind"""
    kind: ScalarKind
    constants: object = field(default=None)

    def __post_init__(self):
        if not self.kind.is_float:
            _check_integral(self.constants, self.kind)
        value = self.kind.make_value(self.constants)
        if isinstance(value, np.ndarray):
            value.setflags(write=False)
        object.__setattr__(self, 'constants', value)


_UFUNCS = {
    'mul': np.multiply,
    'add': np.add,
    'sub': np.subtract,
    'div': np.divide,
}


class ArithmeticOp(ComputeOperation):
    """
    Per-lane arithmetic in the element kind. U8 wraps modulo 256 and
    divides with floor division; no saturation is applied.
    """
    params_type = ArithParams

    def __init__(self, name: str, kind: ScalarKind):
        super().__init__(f"{name}_{kind}", kind, kind)
        self.name = name
        ufunc = _UFUNCS[name]
        if name == 'div' and not kind.is_float:
            ufunc = np.floor_divide
        self.ufunc = ufunc

    def exec(self, value, params: ArithParams):
        return self.ufunc(value, params.constants)

    def bind(self, params: ArithParams):
        ufunc = self.ufunc
        constants = params.constants

        def stage(values):
            return ufunc(values, constants, out=values)
        return stage


def _lanes_of(constants) -> int:
    return 3 if np.ndim(constants) == 1 and len(constants) == 3 else 1


def _arith(name: str, constants, kind: Optional[ScalarKind]) -> InstantiableOp:
    if kind is None:
        kind = ScalarKind.F32x3 if _lanes_of(constants) == 3 else ScalarKind.F32
    params = ArithParams(kind, constants)
    if name == 'div' and np.any(np.asarray(params.constants) == 0):
        raise DivByZeroParamError(f"Div constants must be nonzero, got {constants}")
    return instantiate(ArithmeticOp(name, kind), params)


def op_mul(constants, kind: Optional[ScalarKind] = None) -> InstantiableOp:
    """Multiply by per-lane constants; kind defaults to F32 (or F32x3 for three constants)"""
    return _arith('mul', constants, kind)


def op_add(constants, kind: Optional[ScalarKind] = None) -> InstantiableOp:
    return _arith('add', constants, kind)


def op_sub(constants, kind: Optional[ScalarKind] = None) -> InstantiableOp:
    return _arith('sub', constants, kind)


def op_div(constants, kind: Optional[ScalarKind] = None) -> InstantiableOp:
    return _arith('div', constants, kind)
