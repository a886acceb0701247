"""
Fused vs unfused benchmark experiments

Each experiment builds both strategies over identical inputs, checks that
their outputs are bitwise equal, then times them. Default sweeps and
shapes follow the classic kernel-fusion evaluation: op-count scaling on a
4096x2160 u8 matrix, batches of 60x120 u8 crops, a constant 500
instructions split into Ops, element-count scaling, type pairs, a batched
image preprocessing chain and the cost of the high-level facade.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from fusedkernel.api import highlevel
from fusedkernel.bench.stats import BenchRecord, make_record, time_runs
from fusedkernel.config.execution_config import ExecConfig, get_config
from fusedkernel.errors import EqualityGateError
from fusedkernel.executor.fused import execute_fused
from fusedkernel.executor.unfused import execute_unfused, intermediate_nbytes, plan_memory_savings
from fusedkernel.ops.arithmetic import op_add, op_div, op_mul, op_sub
from fusedkernel.ops.cast import op_cast
from fusedkernel.ops.core import InstantiableOp, Pipeline, validate_chain
from fusedkernel.ops.memory import (
    op_batch_read, op_batch_write, op_read_per_thread, op_write_per_thread,
)
from fusedkernel.ops.static_loop import expand_static_loops, op_compute_chain, op_static_loop
from fusedkernel.tensor.plane import Plane, plane_alloc
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)

# Chains longer than this are expressed with StaticLoop on the fused side
STATIC_LOOP_THRESHOLD = 64

VF_OPS = (2, 102, 202)
HF_BATCHES = (10, 50, 150, 600)
VF_HF_PAIRS = (2, 100, 1000)
IPO_TOTAL = 500
IPO_PER_OP = tuple(range(1, 497, 5))
DATASIZE_ELEMENTS = (100, 10_000, 1_000_000, 16_654_030)
DATASIZE_PAIRS = 100
DATATYPE_PAIRS = (
    (ScalarKind.U8, ScalarKind.U8),
    (ScalarKind.U8, ScalarKind.F32),
    (ScalarKind.U8, ScalarKind.F64),
    (ScalarKind.F32, ScalarKind.U8),
    (ScalarKind.F32, ScalarKind.F32),
    (ScalarKind.F32, ScalarKind.F64),
    (ScalarKind.F64, ScalarKind.F32),
    (ScalarKind.F64, ScalarKind.F64),
)

VF_DIMS = (4096, 2160)
BATCH_DIMS = (60, 120)
IPO_DIMS = (256, 256)
HF_BATCH = 50
PREPROCESS_BATCHES = (10, 50, 100, 150)
PREPROCESS_SOURCE_DIMS = (640, 480)
PREPROCESS_CROP = (120, 240)
OVERHEAD_OPS = (2, 10, 50)


@dataclass
class BenchSettings:
    repeats: int = 30
    warmup: int = 2
    seed: int = 0
    config: ExecConfig = field(default_factory=lambda: get_config('benchmark'))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


# Inputs

def random_plane(rng: np.random.Generator, width: int, height: int, kind: ScalarKind) -> Plane:
    shape = (height, width) + kind.element_shape()
    if kind.is_float:
        values = rng.uniform(0.0, 255.0, size=shape)
    else:
        values = rng.integers(0, 256, size=shape)
    return Plane.from_array(values.astype(kind.dtype), kind)


def plane_shape(elements: int) -> Tuple[int, int]:
    """(width, height) holding exactly `elements` with width >= height, as square as possible"""
    height = math.isqrt(elements)
    while elements % height:
        height -= 1
    return elements // height, height


# Chains

def mul_add_chain(n_ops: int, kind: ScalarKind) -> List[InstantiableOp]:
    """Alternating Mul and Add ops, n_ops in total"""
    mul = op_mul(3, kind)
    add = op_add(7, kind)
    return [mul if index % 2 == 0 else add for index in range(n_ops)]


def compact_chain(iops: Sequence[InstantiableOp]) -> List[InstantiableOp]:
    """Repeated Mul+Add pairs packed into one StaticLoop when the chain is long"""
    if len(iops) <= STATIC_LOOP_THRESHOLD:
        return list(iops)
    pairs = len(iops) // 2
    compact = [op_static_loop(op_compute_chain(iops[:2]), pairs)]
    if len(iops) % 2:
        compact.append(iops[-1])
    return compact


def normalize_chain(source: ScalarKind, target: ScalarKind) -> List[InstantiableOp]:
    """Cast -> Mul -> Sub -> Div in the target kind"""
    return [
        op_cast(source, target),
        op_mul(2, target),
        op_sub(3, target),
        op_div(4, target),
    ]


def split_instructions(total: int, per_op: int) -> List[int]:
    """Instruction counts per Op; the last Op takes the remainder"""
    if not 1 <= per_op <= total:
        raise ValueError(f"per_op must be in [1, {total}], got {per_op}")
    counts = [per_op] * (total // per_op)
    if total % per_op:
        counts.append(total % per_op)
    return counts


def _chain(source: Plane, compute: Sequence[InstantiableOp], dest: Plane) -> List[InstantiableOp]:
    return [op_read_per_thread(source), *compute, op_write_per_thread(dest)]


def _batch_chain(sources: Sequence[Plane], compute: Sequence[InstantiableOp],
                 dests: Sequence[Plane]) -> List[InstantiableOp]:
    return [
        op_batch_read([op_read_per_thread(plane) for plane in sources]),
        *compute,
        op_batch_write([op_write_per_thread(plane) for plane in dests]),
    ]


def _alloc_like(planes: Sequence[Plane], kind: ScalarKind) -> List[Plane]:
    return [plane_alloc(plane.width, plane.height, kind) for plane in planes]


# Gate and timing

def equality_gate(experiment: str, param, expected: Sequence[Plane], actual: Sequence[Plane]) -> None:
    for index, (left, right) in enumerate(zip(expected, actual)):
        if not left.same_contents(right):
            logger.warning(f"{experiment} {param}: fused and unfused outputs differ on plane #{index}")
            raise EqualityGateError(
                f"{experiment} at {param}: fused and unfused outputs differ on plane #{index}"
            )


def _compare(experiment: str, param, settings: BenchSettings,
             fused: Callable[[], object], unfused: Callable[[], object],
             fused_out: Sequence[Plane], unfused_out: Sequence[Plane]) -> BenchRecord:
    fused()
    unfused()
    equality_gate(experiment, param, fused_out, unfused_out)
    fused_timing = time_runs(fused, settings.repeats, settings.warmup)
    unfused_timing = time_runs(unfused, settings.repeats, settings.warmup)
    record = make_record(experiment, param, fused_timing, unfused_timing)
    logger.info(f"{experiment} {param}: speedup {record.speedup:.2f}x (rsd {record.rsd_pct:.1f}%)")
    return record


def _fused_runner(iops: Sequence[InstantiableOp], config: ExecConfig) -> Callable[[], object]:
    pipeline = validate_chain(iops)
    return lambda: execute_fused(pipeline, config)


def _unfused_runner(iops: Sequence[InstantiableOp], config: ExecConfig) -> Callable[[], object]:
    validate_chain(iops)
    return lambda: execute_unfused(iops, config)


def _per_plane_runner(pipelines: Sequence[Pipeline], config: ExecConfig) -> Callable[[], object]:
    def run():
        for pipeline in pipelines:
            execute_fused(pipeline, config)
    return run


# Experiments

def bench_vf(settings: BenchSettings, sweep: Sequence[int] = VF_OPS,
             dims: Tuple[int, int] = VF_DIMS) -> List[BenchRecord]:
    """Vertical fusion: n_ops dependent Mul/Add ops on one u8 matrix"""
    rng = settings.rng()
    width, height = dims
    source = random_plane(rng, width, height, ScalarKind.U8)
    fused_dest = plane_alloc(width, height, ScalarKind.U8)
    unfused_dest = plane_alloc(width, height, ScalarKind.U8)

    records = []
    for n_ops in sweep:
        if n_ops < 2:
            raise ValueError(f"vf needs at least 2 ops, got {n_ops}")
        flat = mul_add_chain(n_ops, ScalarKind.U8)
        fused = _fused_runner(_chain(source, compact_chain(flat), fused_dest), settings.config)
        unfused = _unfused_runner(_chain(source, flat, unfused_dest), settings.config)
        records.append(_compare('vf', n_ops, settings, fused, unfused, [fused_dest], [unfused_dest]))
    return records


def bench_hf(settings: BenchSettings, sweep: Sequence[int] = HF_BATCHES,
             dims: Tuple[int, int] = BATCH_DIMS) -> List[BenchRecord]:
    """Horizontal fusion: one batched execution vs one VF execution per plane"""
    rng = settings.rng()
    width, height = dims
    compute = normalize_chain(ScalarKind.U8, ScalarKind.F32)

    records = []
    for batch in sweep:
        if batch < 1:
            raise ValueError(f"hf batch must be >= 1, got {batch}")
        sources = [random_plane(rng, width, height, ScalarKind.U8) for _ in range(batch)]
        fused_dests = _alloc_like(sources, ScalarKind.F32)
        loop_dests = _alloc_like(sources, ScalarKind.F32)
        fused = _fused_runner(_batch_chain(sources, compute, fused_dests), settings.config)
        per_plane = [validate_chain(_chain(src, compute, dst)) for src, dst in zip(sources, loop_dests)]
        baseline = _per_plane_runner(per_plane, settings.config)
        records.append(_compare('hf', batch, settings, fused, baseline, fused_dests, loop_dests))
    return records


def bench_vf_hf(settings: BenchSettings, sweep: Sequence[int] = VF_HF_PAIRS,
                dims: Tuple[int, int] = BATCH_DIMS, batch: int = HF_BATCH) -> List[BenchRecord]:
    """Mul+Add pairs over a batch: fused in both axes vs unfused in both"""
    rng = settings.rng()
    width, height = dims
    sources = [random_plane(rng, width, height, ScalarKind.U8) for _ in range(batch)]
    fused_dests = _alloc_like(sources, ScalarKind.U8)
    unfused_dests = _alloc_like(sources, ScalarKind.U8)

    records = []
    for pairs in sweep:
        flat = mul_add_chain(2 * pairs, ScalarKind.U8)
        fused = _fused_runner(_batch_chain(sources, compact_chain(flat), fused_dests), settings.config)
        chains = [_chain(src, flat, dst) for src, dst in zip(sources, unfused_dests)]

        def unfused(chains=chains):
            for iops in chains:
                execute_unfused(iops, settings.config)

        records.append(_compare('vf-hf', pairs, settings, fused, unfused, fused_dests, unfused_dests))
    return records


def bench_instructions_per_op(settings: BenchSettings, sweep: Sequence[int] = IPO_PER_OP,
                              total: int = IPO_TOTAL,
                              dims: Tuple[int, int] = IPO_DIMS) -> List[BenchRecord]:
    """
    A constant `total` float Mul applications: one fused Op holding all
    of them vs ceil(total / per_op) unfused Ops of per_op each.
    """
    rng = settings.rng()
    width, height = dims
    source = random_plane(rng, width, height, ScalarKind.F32)
    fused_dest = plane_alloc(width, height, ScalarKind.F32)
    unfused_dest = plane_alloc(width, height, ScalarKind.F32)
    mul = op_mul(1.0001, ScalarKind.F32)
    fused = _fused_runner(_chain(source, [op_static_loop(mul, total)], fused_dest), settings.config)

    records = []
    for per_op in sweep:
        ops = [op_static_loop(mul, count) for count in split_instructions(total, per_op)]
        unfused = _unfused_runner(_chain(source, ops, unfused_dest), settings.config)
        records.append(_compare('ipo', per_op, settings, fused, unfused, [fused_dest], [unfused_dest]))
    return records


def bench_datasize(settings: BenchSettings, sweep: Sequence[int] = DATASIZE_ELEMENTS,
                   pairs: int = DATASIZE_PAIRS) -> List[BenchRecord]:
    """A fixed 100 Mul+Add pairs over a growing number of f32 elements"""
    rng = settings.rng()
    mul = op_mul(1.0001, ScalarKind.F32)
    add = op_add(0.5, ScalarKind.F32)
    fused_compute = [op_static_loop(op_compute_chain([mul, add]), pairs)]
    flat = expand_static_loops(fused_compute)

    records = []
    for elements in sweep:
        width, height = plane_shape(elements)
        source = random_plane(rng, width, height, ScalarKind.F32)
        fused_dest = plane_alloc(width, height, ScalarKind.F32)
        unfused_dest = plane_alloc(width, height, ScalarKind.F32)
        fused = _fused_runner(_chain(source, fused_compute, fused_dest), settings.config)
        unfused = _unfused_runner(_chain(source, flat, unfused_dest), settings.config)
        records.append(_compare('datasize', elements, settings, fused, unfused, [fused_dest], [unfused_dest]))
    return records


def bench_datatype(settings: BenchSettings,
                   sweep: Sequence[Tuple[ScalarKind, ScalarKind]] = DATATYPE_PAIRS,
                   dims: Tuple[int, int] = BATCH_DIMS, batch: int = HF_BATCH) -> List[BenchRecord]:
    """Batched Read -> Cast -> Mul -> Sub -> Div -> Write for input -> output type pairs"""
    rng = settings.rng()
    width, height = dims

    records = []
    for source_kind, target_kind in sweep:
        sources = [random_plane(rng, width, height, source_kind) for _ in range(batch)]
        fused_dests = _alloc_like(sources, target_kind)
        unfused_dests = _alloc_like(sources, target_kind)
        compute = normalize_chain(source_kind, target_kind)
        fused = _fused_runner(_batch_chain(sources, compute, fused_dests), settings.config)
        unfused = _unfused_runner(_batch_chain(sources, compute, unfused_dests), settings.config)
        param = f"{source_kind.name.lower()}->{target_kind.name.lower()}"
        records.append(_compare('datatype', param, settings, fused, unfused, fused_dests, unfused_dests))
    return records


# Memory accounting

def preprocessing_handles(source: Plane, dest3: Sequence[Plane],
                          rect: Tuple[int, int, int, int] = (0, 0, 120, 240),
                          dims: Tuple[int, int] = BATCH_DIMS) -> List[highlevel.LazyHandle]:
    """crop -> resize -> cvt_color -> multiply -> subtract -> divide -> split"""
    cropped = highlevel.crop(source, rect)
    return [
        cropped,
        highlevel.resize(cropped, dims),
        highlevel.cvt_color('SwapRB', source.kind),
        highlevel.multiply([1 / 255.0] * 3, source.kind),
        highlevel.subtract([0.485, 0.456, 0.406], source.kind),
        highlevel.divide([0.229, 0.224, 0.225], source.kind),
        highlevel.split(dest3),
    ]


def report_memory(source: Optional[Plane] = None) -> Dict[str, int]:
    """Intermediate bytes the fused strategy avoids"""
    width, height = BATCH_DIMS
    if source is None:
        source = plane_alloc(2 * width, 2 * height, ScalarKind.F32x3)
    dest3 = [plane_alloc(width, height, ScalarKind.F32) for _ in range(3)]
    pipeline = highlevel.LazyExecutor().pipeline(preprocessing_handles(source, dest3))
    identity = validate_chain([op_read_per_thread(dest3[0]), op_write_per_thread(dest3[1])])

    report = {
        'preprocessing_per_image': plan_memory_savings(pipeline),
        'identity_pipeline': plan_memory_savings(identity),
        'rgb_u8_4k_intermediate': intermediate_nbytes(3840, 2160, ScalarKind.U8x3),
        'rgb_f32_4k_intermediate': intermediate_nbytes(3840, 2160, ScalarKind.F32x3),
    }
    for name, nbytes in report.items():
        logger.info(f"memory {name}: {nbytes} bytes")
    return report


def crop_rects(batch: int, source_dims: Tuple[int, int] = PREPROCESS_SOURCE_DIMS,
               crop: Tuple[int, int] = PREPROCESS_CROP) -> List[Tuple[int, int, int, int]]:
    """One (x, y, width, height) crop per image, offsets spread over the source"""
    source_width, source_height = source_dims
    crop_width, crop_height = crop
    if crop_width > source_width or crop_height > source_height:
        raise ValueError(f"crop {crop_width}x{crop_height} exceeds source {source_width}x{source_height}")
    return [
        ((index * 37) % (source_width - crop_width + 1),
         (index * 23) % (source_height - crop_height + 1),
         crop_width, crop_height)
        for index in range(batch)
    ]


def bench_preprocessing(settings: BenchSettings, sweep: Sequence[int] = PREPROCESS_BATCHES,
                        dims: Tuple[int, int] = BATCH_DIMS,
                        source_dims: Tuple[int, int] = PREPROCESS_SOURCE_DIMS,
                        crop: Tuple[int, int] = PREPROCESS_CROP) -> List[BenchRecord]:
    """
    Batched crop -> resize -> cvt_color -> multiply -> subtract -> divide ->
    split over crops of one RGB source. The fused side is a single batched
    execution whose pipeline is built before timing; the baseline runs the
    multi-pass strategy once per image.
    """
    rng = settings.rng()
    width, height = dims
    source = random_plane(rng, *source_dims, ScalarKind.F32x3)
    executor = highlevel.LazyExecutor(settings.config)

    records = []
    for batch in sweep:
        if batch < 1:
            raise ValueError(f"preprocess batch must be >= 1, got {batch}")
        rects = crop_rects(batch, source_dims, crop)
        fused_dests = [[plane_alloc(width, height, ScalarKind.F32) for _ in range(3)] for _ in range(batch)]
        unfused_dests = [_alloc_like(dest3, ScalarKind.F32) for dest3 in fused_dests]

        per_plane = []
        for rect, dest3 in zip(rects, fused_dests):
            handles = preprocessing_handles(source, dest3, rect, dims)
            per_plane.append([handles[0], handles[1], handles[-1]])
        shared = handles[2:-1]
        fused = _fused_runner(highlevel.build_batch(per_plane, shared).iops, settings.config)

        pipelines = [executor.pipeline(preprocessing_handles(source, dest3, rect, dims))
                     for rect, dest3 in zip(rects, unfused_dests)]

        def unfused(pipelines=pipelines):
            for pipeline in pipelines:
                execute_unfused(pipeline.iops, settings.config)

        flat_fused = [plane for dest3 in fused_dests for plane in dest3]
        flat_unfused = [plane for dest3 in unfused_dests for plane in dest3]
        records.append(_compare('preprocess', batch, settings, fused, unfused, flat_fused, flat_unfused))
    return records


def bench_wrapper_overhead(settings: BenchSettings, sweep: Sequence[int] = OVERHEAD_OPS,
                           dims: Tuple[int, int] = BATCH_DIMS) -> List[BenchRecord]:
    """
    One f32 Mul/Add chain launched directly (validate_chain once, then
    execute_fused) and through execute_operations. In these rows fused_ns is
    the direct launch and unfused_ns the facade launch, so speedup is the
    facade's relative cost.
    """
    rng = settings.rng()
    width, height = dims
    source = random_plane(rng, width, height, ScalarKind.F32)
    direct_dest = plane_alloc(width, height, ScalarKind.F32)
    facade_dest = plane_alloc(width, height, ScalarKind.F32)

    records = []
    for n_ops in sweep:
        if n_ops < 1:
            raise ValueError(f"overhead needs at least 1 op, got {n_ops}")
        compute = [
            highlevel.multiply(1.0001, ScalarKind.F32) if index % 2 == 0
            else highlevel.add(0.5, ScalarKind.F32)
            for index in range(n_ops)
        ]
        handles = [highlevel.read(source), *compute, highlevel.write(facade_dest)]
        direct_chain = _chain(source, [handle.iop for handle in compute], direct_dest)
        direct = _fused_runner(direct_chain, settings.config)

        def facade(handles=handles):
            highlevel.execute_operations(handles, settings.config)

        records.append(_compare('overhead', n_ops, settings, direct, facade, [direct_dest], [facade_dest]))
    return records


EXPERIMENTS: Dict[str, Callable[..., List[BenchRecord]]] = {
    'vf': bench_vf,
    'hf': bench_hf,
    'vf-hf': bench_vf_hf,
    'ipo': bench_instructions_per_op,
    'datasize': bench_datasize,
    'datatype': bench_datatype,
    'preprocess': bench_preprocessing,
    'overhead': bench_wrapper_overhead,
}
