"""
Shared pytest fixtures
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fusedkernel.config.execution_config import ExecConfig
from fusedkernel.tensor.accounting import element_reads
from fusedkernel.tensor.plane import Plane
from fusedkernel.tensor.scalar_kind import ScalarKind


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config():
    return ExecConfig(workers=2, chunk_rows=4)


@pytest.fixture
def serial_config():
    return ExecConfig(workers=1, chunk_rows=4)


@pytest.fixture
def make_plane(rng):
    """Factory for random planes of a given kind"""
    def factory(width, height, kind=ScalarKind.U8, low=0, high=256):
        shape = (height, width) + kind.element_shape()
        if kind.is_float:
            values = rng.uniform(low, high, size=shape)
        else:
            values = rng.integers(low, high, size=shape)
        return Plane.from_array(values.astype(kind.dtype), kind)
    return factory


@pytest.fixture
def reset_reads():
    element_reads.reset()
    yield element_reads
    element_reads.reset()
