"""
Static composition path

All op lookups and kind dispatch happen once, in the constructor. The tile
loop then only calls pre-bound functions: nothing is selected per element.
"""

from functools import partial
from typing import Sequence

import numpy as np

from fusedkernel.ops.core import InstantiableOp, validate_chain


class FusedKernel:
    """A Read -> compute* -> Write chain resolved into plain callables"""

    def __init__(self, read: InstantiableOp, compute: Sequence[InstantiableOp],
                 write: InstantiableOp):
        read_op = read.operation
        write_op = write.operation
        self.read_iop = read
        self.write_iop = write
        self._read_tile = partial(read_op.read_tile, read.params)
        self._stages = tuple(iop.operation.bind(iop.params) for iop in compute)
        self._write_tile = partial(write_op.write_tile, write.params)
        self._read_bytes = partial(read_op.read_bytes, read.params)
        self._write_bytes = partial(write_op.write_bytes, write.params)
        self._element_shape = read.signature.output_kind.element_shape()

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Run only the compute stages; `values` may be overwritten"""
        for stage in self._stages:
            values = stage(values)
        return values

    def run_tile(self, z: int, y0: int, y1: int, x0: int, x1: int, block: int = 1) -> int:
        """
        Read, transform and write one tile; returns the points processed.
        With block > 1 the tile is viewed as rows of `block`-wide groups,
        x1 - x0 must then be a multiple of block.
        """
        values = self._read_tile(z, y0, y1, x0, x1)
        if block > 1:
            rows, cols = values.shape[:2]
            grouped = values.reshape((rows, cols // block, block) + self._element_shape)
            out = self.apply(grouped)
            values = out.reshape((rows, cols) + out.shape[3:])
        else:
            values = self.apply(values)
        self._write_tile(z, y0, y1, x0, x1, values)
        return (y1 - y0) * (x1 - x0)

    def traffic(self, z: int, points: int):
        """(bytes_read, bytes_written) for `points` points of plane z"""
        return self._read_bytes(z) * points, self._write_bytes(z) * points


def compose(read: InstantiableOp, *compute: InstantiableOp, write: InstantiableOp) -> FusedKernel:
    """Validate a chain at build time and return its fused kernel"""
    return validate_chain([read, *compute, write]).kernel
