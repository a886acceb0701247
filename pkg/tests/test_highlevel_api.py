"""
Unit tests for the lazy high-level facade
"""

import gc

import numpy as np
import pytest

from fusedkernel.api import highlevel
from fusedkernel.api.highlevel import (
    LazyExecutor, add, build_batch, cast, crop, cvt_color, default_executor, divide,
    execute_batch, execute_operations, lower_handles, multiply, read, resize, split,
    subtract, write,
)
from fusedkernel.dpp.transform import transform_point
from fusedkernel.errors import (
    CropOutOfBoundsError, DivByZeroParamError, HeterogeneousBatchError, KindMismatchError,
)
from fusedkernel.executor.unfused import plan_memory_savings
from fusedkernel.ops.arithmetic import op_div, op_mul, op_sub
from fusedkernel.ops.color import op_color_convert
from fusedkernel.ops.core import OpKind, validate_chain
from fusedkernel.ops.memory import op_crop, op_resize, op_split_write
from fusedkernel.tensor.accounting import memory_ledger
from fusedkernel.tensor.plane import ThreadPoint, plane_alloc
from fusedkernel.tensor.scalar_kind import ScalarKind

MEAN = (0.485, 0.456, 0.406)
STD = (0.229, 0.224, 0.225)


def preprocessing(source, dest3, rect=(10, 20, 120, 240), dims=(60, 120)):
    cropped = crop(source, rect)
    return [
        cropped,
        resize(cropped, dims),
        cvt_color('SwapRB', ScalarKind.F32x3),
        multiply([1 / 255.0] * 3),
        subtract(MEAN),
        divide(STD),
        split(dest3),
    ]


def crop_resize_write(source, rect, dims, dest):
    cropped = crop(source, rect)
    return [cropped, resize(cropped, dims), write(dest)]


class TestHandles:
    """Test handle construction"""

    def test_multiply_by_half(self, make_plane, config):
        """Test read -> multiply(0.5) -> write halves every element"""
        source = make_plane(8, 8, ScalarKind.F32)
        dest = plane_alloc(8, 8, ScalarKind.F32)
        execute_operations([read(source), multiply(0.5), write(dest)], config)
        assert np.array_equal(dest.to_array(), source.to_array() * np.float32(0.5))

    def test_handles_are_lazy(self, make_plane, reset_reads):
        """Test building handles touches no plane data"""
        source = make_plane(8, 8)
        handles = [read(source), cast(ScalarKind.U8, ScalarKind.F32), add(1.0),
                   write(plane_alloc(8, 8, ScalarKind.F32))]
        assert reset_reads.total == 0
        assert [handle.kind for handle in handles] == [OpKind.READ, OpKind.UNARY, OpKind.BINARY, OpKind.WRITE]

    def test_handle_kinds(self):
        """Test handles expose the kinds of their IOp"""
        handle = cast(ScalarKind.U8, ScalarKind.F64)
        assert handle.input_kind == ScalarKind.U8
        assert handle.output_kind == ScalarKind.F64
        assert handle.provenance == 'cast'

    def test_divide_by_zero_names_the_handle(self):
        """Test divide(0.0) fails immediately with its provenance"""
        with pytest.raises(DivByZeroParamError) as info:
            divide(0.0)
        assert info.value.provenance == 'divide'
        assert str(info.value).startswith('divide: ')

    def test_crop_out_of_bounds_names_the_handle(self):
        """Test crop errors carry the crop provenance"""
        with pytest.raises(CropOutOfBoundsError) as info:
            crop(plane_alloc(10, 10, ScalarKind.U8), (5, 5, 10, 10))
        assert info.value.provenance == 'crop'

    def test_resize_of_plane_has_no_upstream(self):
        """Test resizing a plane directly reports the target extents"""
        handle = resize(plane_alloc(10, 10, ScalarKind.U8), (5, 5), 'nearest')
        assert handle.upstream is None
        assert handle.iop.dims_hint == (5, 5, 1)


class TestLowering:
    """Test handle chains lower to the expected pipelines"""

    def test_preprocessing_structure(self, make_plane):
        """Test crop/resize collapse and SwapRB folds into the read"""
        source = make_plane(200, 300, ScalarKind.F32x3)
        dest3 = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        pipeline = LazyExecutor().pipeline(preprocessing(source, dest3))
        assert pipeline.read.op_id.startswith('reorder_read')
        assert pipeline.compute_count == 3
        assert pipeline.write.op_id.startswith('split_write')
        assert pipeline.iter_space == (60, 120, 1)

    def test_memory_plan(self, make_plane):
        """Test the per-image plan is three 60x120 F32x3 intermediates"""
        source = make_plane(200, 300, ScalarKind.F32x3)
        dest3 = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        pipeline = LazyExecutor().pipeline(preprocessing(source, dest3))
        assert plan_memory_savings(pipeline) == 259200

    def test_origins_point_at_handles(self, make_plane):
        """Test every lowered IOp remembers the handle it came from"""
        source = make_plane(20, 20, ScalarKind.F32x3)
        handles = preprocessing(source, [plane_alloc(6, 6, ScalarKind.F32) for _ in range(3)],
                                rect=(0, 0, 12, 12), dims=(6, 6))
        iops, origins = lower_handles(handles)
        assert len(iops) == 5
        assert origins == [1, 3, 4, 5, 6]

    def test_swap_rb_later_in_chain_is_kept(self, make_plane):
        """Test only a SwapRB right after the read is folded"""
        source = make_plane(4, 4, ScalarKind.F32x3)
        handles = [read(source), multiply([2.0] * 3), cvt_color('SwapRB'), write(plane_alloc(4, 4, ScalarKind.F32x3))]
        iops, origins = lower_handles(handles)
        assert len(iops) == 4
        assert origins == [0, 1, 2, 3]

    def test_kind_mismatch_names_second_handle(self, make_plane):
        """Test chain errors name the offending handle"""
        source = make_plane(4, 4)
        with pytest.raises(KindMismatchError) as info:
            execute_operations([read(source), multiply(2.0), write(plane_alloc(4, 4, ScalarKind.F32))])
        assert info.value.handle_index == 1
        assert info.value.provenance == 'multiply'
        assert 'handle #2 (multiply)' in str(info.value)


class TestExecution:
    """Test LazyExecutor behaviour"""

    def test_facade_matches_direct_ops(self, make_plane, config):
        """Test the facade output equals the same chain built from operations"""
        source = make_plane(200, 300, ScalarKind.F32x3, high=255)
        facade_out = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        direct_out = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        execute_operations(preprocessing(source, facade_out), config)

        pipeline = validate_chain([
            op_resize(op_crop(source, 10, 20, 120, 240), 60, 120),
            op_color_convert('SwapRB'),
            op_mul([1 / 255.0] * 3), op_sub(MEAN), op_div(STD),
            op_split_write(direct_out),
        ])
        for y in range(120):
            for x in range(60):
                transform_point(pipeline, ThreadPoint(x, y))

        for facade, direct in zip(facade_out, direct_out):
            assert facade.same_contents(direct)

    def test_validates_once(self, make_plane, mocker, config):
        """Test re-running the same handles skips validation"""
        spy = mocker.spy(highlevel, 'validate_chain')
        source = make_plane(16, 16, ScalarKind.F32)
        handles = [read(source), multiply(2.0), add(1.0), write(plane_alloc(16, 16, ScalarKind.F32))]
        executor = LazyExecutor(config)
        for _ in range(3):
            executor.execute(handles)
        assert spy.call_count == 1
        assert executor.validations == 1
        assert executor.cached_pipelines() == 1

    def test_preprocessing_is_lazy_and_repeatable(self, make_plane, config, reset_reads):
        """Test building the chain reads nothing and two runs give the same planes"""
        source = make_plane(200, 300, ScalarKind.F32x3, high=255)
        dest3 = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        handles = preprocessing(source, dest3)
        assert reset_reads.total == 0

        executor = LazyExecutor(config)
        executor.execute(handles)
        first = [plane.to_array() for plane in dest3]
        for plane in dest3:
            plane.array()[...] = 0
        executor.execute(handles)
        assert executor.validations == 1
        assert all(np.array_equal(before, plane.to_array()) for before, plane in zip(first, dest3))
        assert reset_reads.total == 2 * 60 * 120 * 4

    def test_clear_forgets_pipelines(self, make_plane, config):
        """Test clear drops every cached pipeline"""
        source = make_plane(4, 4, ScalarKind.F32)
        handles = [read(source), write(plane_alloc(4, 4, ScalarKind.F32))]
        executor = LazyExecutor(config)
        executor.execute(handles)
        executor.clear()
        assert executor.cached_pipelines() == 0
        executor.execute(handles)
        assert executor.validations == 2

    def test_dropped_handles_release_their_planes(self, serial_config):
        """Test the shared cache keeps no plane alive once its handles are gone"""
        gc.collect()
        cached = default_executor.cached_pipelines()
        live = memory_ledger.live_bytes
        for _ in range(5):
            source = plane_alloc(64, 64, ScalarKind.F64)
            dest = plane_alloc(64, 64, ScalarKind.F64)
            execute_operations([read(source), write(dest)], serial_config)
            del source, dest
        gc.collect()
        assert default_executor.cached_pipelines() == cached
        assert memory_ledger.live_bytes == live

    def test_cached_entry_lives_with_its_handles(self, make_plane, config):
        """Test a pipeline stays cached while its handles are referenced"""
        executor = LazyExecutor(config)
        kept = [read(make_plane(4, 4, ScalarKind.F32)), write(plane_alloc(4, 4, ScalarKind.F32))]
        executor.execute(kept)
        executor.execute([read(make_plane(4, 4, ScalarKind.F32)), write(plane_alloc(4, 4, ScalarKind.F32))])
        gc.collect()
        assert executor.cached_pipelines() == 1
        executor.execute(kept)
        assert executor.validations == 2

    def test_unfused_matches_fused(self, make_plane, config):
        """Test the facade's baseline run matches its fused run"""
        source = make_plane(200, 300, ScalarKind.F32x3, high=255)
        fused_out = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        unfused_out = [plane_alloc(60, 120, ScalarKind.F32) for _ in range(3)]
        executor = LazyExecutor(config)
        fused = executor.execute(preprocessing(source, fused_out))
        unfused = executor.execute_unfused(preprocessing(source, unfused_out))
        assert fused.passes == 1
        assert unfused.passes == 4
        assert unfused.intermediate_bytes_allocated == 259200
        for left, right in zip(fused_out, unfused_out):
            assert left.same_contents(right)


class TestBatch:
    """Test execute_batch"""

    def test_fifty_crops(self, make_plane, config):
        """Test 50 crops of one image in a single execution"""
        source = make_plane(400, 200)
        dests = [plane_alloc(20, 10, ScalarKind.F32) for _ in range(50)]
        per_plane = [[crop(source, (index * 7, index * 3, 20, 10)), write(dest)]
                     for index, dest in enumerate(dests)]
        shared = [cast(ScalarKind.U8, ScalarKind.F32), multiply(0.5)]
        report = execute_batch(per_plane, shared, config)
        assert report.points_visited == 20 * 10 * 50
        values = source.to_array()
        for index, dest in enumerate(dests):
            region = values[index * 3:index * 3 + 10, index * 7:index * 7 + 20]
            assert np.array_equal(dest.to_array(), region.astype(np.float32) * np.float32(0.5))

    def test_crop_resize_chains(self, make_plane, config):
        """Test per-plane crop -> resize chains batch like single executions"""
        sources = [make_plane(40, 30, ScalarKind.F32x3, high=255) for _ in range(3)]
        rects = [(0, 0, 20, 20), (5, 3, 20, 20), (10, 8, 20, 20)]
        batched = [plane_alloc(8, 8, ScalarKind.F32x3) for _ in range(3)]
        single = [plane_alloc(8, 8, ScalarKind.F32x3) for _ in range(3)]

        per_plane = [crop_resize_write(source, rect, (8, 8), dest)
                     for source, rect, dest in zip(sources, rects, batched)]
        report = execute_batch(per_plane, [multiply([2.0] * 3)], config)
        assert report.points_visited == 8 * 8 * 3

        for source, rect, dest in zip(sources, rects, single):
            cropped, resized, written = crop_resize_write(source, rect, (8, 8), dest)
            execute_operations([cropped, resized, multiply([2.0] * 3), written], config)
        for left, right in zip(batched, single):
            assert left.same_contents(right)

    def test_batch_of_one_equals_single_execution(self, make_plane, config):
        """Test a batch of one plane equals a plain execution"""
        source = make_plane(12, 9, ScalarKind.F64)
        single = plane_alloc(12, 9, ScalarKind.F64)
        batched = plane_alloc(12, 9, ScalarKind.F64)
        execute_operations([read(source), multiply(3.0, ScalarKind.F64), write(single)], config)
        execute_batch([[read(source), write(batched)]], [multiply(3.0, ScalarKind.F64)], config)
        assert batched.same_contents(single)

    def test_batch_size_leaves_extra_planes_inactive(self, make_plane, config):
        """Test padding planes are visited but neither read nor written"""
        sources = [make_plane(4, 4, ScalarKind.F32) for _ in range(2)]
        dests = [plane_alloc(4, 4, ScalarKind.F32) for _ in range(2)]
        pipeline = build_batch([[read(s), write(d)] for s, d in zip(sources, dests)], [add(1.0)], batch_size=5)
        assert pipeline.iter_space == (4, 4, 5)
        report = execute_batch([[read(s), write(d)] for s, d in zip(sources, dests)], [add(1.0)],
                               config, batch_size=5)
        assert report.bytes_read == 2 * 16 * 4
        for source, dest in zip(sources, dests):
            assert np.array_equal(dest.to_array(), source.to_array() + np.float32(1.0))

    def test_mixed_extents_are_rejected(self, make_plane):
        """Test planes of different extents cannot share a batch"""
        per_plane = [
            [read(make_plane(4, 4)), write(plane_alloc(4, 4, ScalarKind.U8))],
            [read(make_plane(5, 4)), write(plane_alloc(5, 4, ScalarKind.U8))],
        ]
        with pytest.raises(HeterogeneousBatchError) as info:
            execute_batch(per_plane, [])
        assert info.value.index == 1
        assert 'differs from plane #0' in str(info.value)

    def test_mixed_kinds_are_rejected(self, make_plane):
        """Test planes of different kinds cannot share a batch"""
        per_plane = [
            [read(make_plane(4, 4)), write(plane_alloc(4, 4, ScalarKind.U8))],
            [read(make_plane(4, 4, ScalarKind.F32)), write(plane_alloc(4, 4, ScalarKind.U8))],
        ]
        with pytest.raises(HeterogeneousBatchError):
            execute_batch(per_plane, [])

    def test_plane_chain_needs_read_and_write(self, make_plane):
        """Test a plane chain with compute handles is rejected with its own message"""
        with pytest.raises(HeterogeneousBatchError) as info:
            execute_batch([[read(make_plane(4, 4)), multiply(2.0, ScalarKind.U8),
                            write(plane_alloc(4, 4, ScalarKind.U8))]], [])
        assert info.value.index == 0
        assert str(info.value).startswith('batch plane #0: chain must lower to one read and one write')
        assert 'plane #0 does not match' not in str(info.value)

    def test_empty_batch(self):
        """Test a batch needs at least one plane"""
        with pytest.raises(HeterogeneousBatchError):
            execute_batch([], [])
