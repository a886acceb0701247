"""
Unit tests for TransformDPP, thread coarsening and ReduceDPP
"""

import dataclasses

import numpy as np
import pytest

from fusedkernel.config.execution_config import ExecConfig
from fusedkernel.dpp.coarsening import CoarseningPlan, TailPolicy
from fusedkernel.dpp.reduce import (
    ReduceSpec, Reducer, default_identity, multi_reduce_plane, reduce_plane,
)
from fusedkernel.dpp.transform import transform_point, transform_range, transform_tile
from fusedkernel.errors import ConfigError, EmptyIterSpaceError, KindMismatchError, ParamsError
from fusedkernel.ops.arithmetic import op_add, op_mul
from fusedkernel.ops.cast import op_cast
from fusedkernel.ops.core import validate_chain
from fusedkernel.ops.memory import op_batch_read, op_crop, op_read_per_thread, op_write_per_thread
from fusedkernel.ops.static_loop import op_static_loop
from fusedkernel.tensor.plane import ThreadPoint, plane_alloc, plane_get
from fusedkernel.tensor.scalar_kind import ScalarKind


def scale_pipeline(source, dest):
    return validate_chain([
        op_read_per_thread(source), op_cast(ScalarKind.U8, ScalarKind.F32),
        op_mul(0.5), op_add(1.0), op_write_per_thread(dest),
    ])


class TestTransform:
    """Test TransformDPP"""

    def test_point(self, make_plane):
        """Test a single point runs the whole chain"""
        source = make_plane(4, 3)
        dest = plane_alloc(4, 3, ScalarKind.F32)
        transform_point(scale_pipeline(source, dest), ThreadPoint(2, 1))
        assert plane_get(dest, 2, 1) == np.float32(plane_get(source, 2, 1)) * np.float32(0.5) + np.float32(1.0)
        assert plane_get(dest, 0, 0) == 0

    def test_range_writes_one_row(self, make_plane):
        """Test a row range writes only that row"""
        source = make_plane(6, 3)
        dest = plane_alloc(6, 3, ScalarKind.F32)
        assert transform_range(scale_pipeline(source, dest), 1, 0, (0, 6)) == 6
        values = dest.to_array()
        assert (values[0] == 0).all() and (values[2] == 0).all()
        assert np.array_equal(values[1], source.to_array()[1].astype(np.float32) * np.float32(0.5) + np.float32(1.0))

    def test_tile_matches_points(self, make_plane):
        """Test tile execution matches point execution"""
        source = make_plane(9, 5)
        by_tile = plane_alloc(9, 5, ScalarKind.F32)
        by_point = plane_alloc(9, 5, ScalarKind.F32)
        assert transform_tile(scale_pipeline(source, by_tile), 0, 0, 5, 0, 9) == 45
        pipeline = scale_pipeline(source, by_point)
        for y in range(5):
            for x in range(9):
                transform_point(pipeline, ThreadPoint(x, y))
        assert by_tile.same_contents(by_point)

    @pytest.mark.parametrize('block', [2, 4, 8, 16])
    @pytest.mark.parametrize('tail_policy', list(TailPolicy))
    def test_coarsening_is_invisible(self, make_plane, block, tail_policy):
        """Test every block and tail policy yields the uncoarsened output"""
        source = make_plane(37, 6)
        expected = plane_alloc(37, 6, ScalarKind.F32)
        actual = plane_alloc(37, 6, ScalarKind.F32)
        transform_tile(scale_pipeline(source, expected), 0, 0, 6, 0, 37)
        transform_tile(scale_pipeline(source, actual), 0, 0, 6, 0, 37, CoarseningPlan(block, tail_policy))
        assert actual.same_contents(expected)

    def test_coarsened_static_loop(self, make_plane):
        """Test a coarsened tile runs a StaticLoop like point execution"""
        source = make_plane(12, 2, ScalarKind.F32, low=-1, high=1)
        expected = plane_alloc(12, 2, ScalarKind.F32)
        actual = plane_alloc(12, 2, ScalarKind.F32)
        loop = op_static_loop(op_mul(1.5), 4)
        for dest, plan in ((expected, CoarseningPlan()), (actual, CoarseningPlan(4))):
            pipeline = validate_chain([op_read_per_thread(source), loop, op_write_per_thread(dest)])
            transform_tile(pipeline, 0, 0, 2, 0, 12, plan)
        assert actual.same_contents(expected)

    def test_packed_coarsening(self, make_plane):
        """Test coarsening keeps packed lanes intact"""
        source = make_plane(10, 3, ScalarKind.F32x3)
        expected = plane_alloc(10, 3, ScalarKind.F32x3)
        actual = plane_alloc(10, 3, ScalarKind.F32x3)
        mul = op_mul((1.0, 2.0, 3.0))
        for dest, plan in ((expected, CoarseningPlan()), (actual, CoarseningPlan(4))):
            transform_tile(validate_chain([op_read_per_thread(source), mul, op_write_per_thread(dest)]),
                           0, 0, 3, 0, 10, plan)
        assert actual.same_contents(expected)


class TestCoarseningPlan:
    """Test CoarseningPlan"""

    def test_split(self):
        """Test a row splits into whole blocks and a tail"""
        assert CoarseningPlan(8).split(10) == (8, 2)
        assert CoarseningPlan(1).split(10) == (10, 0)
        assert CoarseningPlan(16).split(5) == (0, 5)

    def test_block_must_be_allowed(self):
        """Test unsupported coarsening blocks are rejected"""
        with pytest.raises(ConfigError):
            CoarseningPlan(3)

    def test_tail_policy_from_string(self):
        """Test tail policies parse from their names"""
        assert CoarseningPlan(2, 'pointwise').tail_policy == TailPolicy.POINTWISE


class TestReduce:
    """Test ReduceDPP"""

    def test_sum_of_ones(self):
        """Test summing ones counts the elements"""
        source = plane_alloc(8, 8, ScalarKind.U8)
        source.array()[...] = 1
        assert reduce_plane(op_read_per_thread(source), ReduceSpec(combine=Reducer.SUM)) == 64

    def test_max(self):
        """Test the max reduction"""
        source = plane_alloc(4, 4, ScalarKind.F32)
        source.array()[2, 3] = 7.5
        source.array()[0, 0] = -2.0
        assert reduce_plane(op_read_per_thread(source), ReduceSpec(combine='Max')) == 7.5
        assert reduce_plane(op_read_per_thread(source), ReduceSpec(combine='Min')) == -2.0

    def test_three_specs_read_once(self, make_plane, reset_reads):
        """Test Sum, Max and Min share a single traversal of an 8x8 plane"""
        source = make_plane(8, 8)
        specs = [ReduceSpec(combine=Reducer.SUM), ReduceSpec(combine=Reducer.MAX), ReduceSpec(combine=Reducer.MIN)]
        total, high, low = multi_reduce_plane(op_read_per_thread(source), specs, ExecConfig(workers=2, chunk_rows=3))
        values = source.to_array()
        assert total == int(values.astype(np.int64).sum())
        assert high == values.max()
        assert low == values.min()
        assert reset_reads.total == 64

    def test_integer_sum_is_exact(self, make_plane):
        """Test integer sums match numpy exactly"""
        planes = [make_plane(31, 17) for _ in range(200)]
        read = op_batch_read([op_read_per_thread(plane) for plane in planes])
        expected = sum(int(plane.to_array().astype(np.int64).sum()) for plane in planes)
        for workers in (1, 2, 4):
            assert reduce_plane(read, ReduceSpec(), ExecConfig(workers=workers, chunk_rows=5)) == expected

    def test_float_sum_within_tolerance(self, make_plane):
        """Test float sums stay within tolerance of numpy"""
        source = make_plane(101, 53, ScalarKind.F32, low=-1, high=1)
        expected = float(source.to_array().astype(np.float64).sum())
        for workers in (1, 2, 4):
            total = reduce_plane(op_read_per_thread(source), ReduceSpec(), ExecConfig(workers=workers, chunk_rows=4))
            assert total == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_fixed_workers_is_deterministic(self, make_plane):
        """Test a fixed worker count gives the same float sum every run"""
        source = make_plane(64, 40, ScalarKind.F32, low=-1, high=1)
        config = ExecConfig(workers=4, chunk_rows=3)
        first = reduce_plane(op_read_per_thread(source), ReduceSpec(), config)
        second = reduce_plane(op_read_per_thread(source), ReduceSpec(), config)
        assert first == second

    def test_mean(self, make_plane):
        """Test the mean reduction"""
        source = make_plane(10, 10, ScalarKind.F64, low=0, high=1)
        mean = reduce_plane(op_read_per_thread(source), ReduceSpec(combine=Reducer.MEAN))
        assert mean == pytest.approx(source.to_array().mean(), rel=1e-12)

    def test_packed_sum_per_lane(self, make_plane):
        """Test packed planes reduce lane by lane"""
        source = make_plane(5, 4, ScalarKind.U8x3)
        total = reduce_plane(op_read_per_thread(source), ReduceSpec())
        assert total.tolist() == source.to_array().astype(np.int64).sum(axis=(0, 1)).tolist()

    def test_transform_then_sum(self, make_plane):
        """Test a transform chain runs before the reduction"""
        source = make_plane(6, 6)
        spec = ReduceSpec(transform=op_cast(ScalarKind.U8, ScalarKind.F32))
        assert reduce_plane(op_read_per_thread(source), spec) == float(source.to_array().astype(np.float64).sum())

    def test_sum_over_crop(self, make_plane):
        """Test reducing through a crop read"""
        source = make_plane(20, 20)
        total = reduce_plane(op_crop(source, 5, 5, 4, 4), ReduceSpec())
        assert total == int(source.to_array()[5:9, 5:9].astype(np.int64).sum())

    def test_explicit_identity(self):
        """Test an explicit identity seeds the reduction"""
        source = plane_alloc(2, 2, ScalarKind.F32)
        assert reduce_plane(op_read_per_thread(source), ReduceSpec(combine='Max', identity=np.float32(3.0))) == 3.0

    def test_default_identity(self):
        """Test each reduction has a default identity"""
        assert default_identity(Reducer.MAX, ScalarKind.U8) == 0
        assert default_identity(Reducer.MIN, ScalarKind.U8) == 255
        assert default_identity(Reducer.MAX, ScalarKind.F32) == -np.inf
        assert default_identity(Reducer.SUM, ScalarKind.F32x3).tolist() == [0.0, 0.0, 0.0]

    def test_transform_kind_mismatch(self):
        """Test a transform must match the read kind"""
        source = plane_alloc(4, 4, ScalarKind.U8)
        with pytest.raises(KindMismatchError):
            reduce_plane(op_read_per_thread(source), ReduceSpec(transform=op_mul(2.0)))

    def test_transform_must_be_compute(self):
        """Test only compute ops may transform"""
        with pytest.raises(ParamsError):
            ReduceSpec(transform=op_read_per_thread(plane_alloc(2, 2, ScalarKind.U8)))

    def test_needs_specs(self):
        """Test a reduction needs at least one spec"""
        with pytest.raises(ParamsError):
            multi_reduce_plane(op_read_per_thread(plane_alloc(2, 2, ScalarKind.U8)), [])

    def test_empty_iter_space(self):
        """Test an empty iteration space is rejected"""
        read = dataclasses.replace(op_read_per_thread(plane_alloc(4, 4, ScalarKind.U8)), dims_hint=(0, 4, 1))
        with pytest.raises(EmptyIterSpaceError):
            reduce_plane(read, ReduceSpec())
