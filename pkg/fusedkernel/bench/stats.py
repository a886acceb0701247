"""
Timing and summary statistics for benchmark runs
"""

import gc
import statistics
import time
from dataclasses import dataclass
from typing import Any, Callable, List

MIN_REPEATS = 3


@dataclass(frozen=True)
class Timing:
    samples_ns: List[int]

    @property
    def mean_ns(self) -> float:
        return statistics.fmean(self.samples_ns)

    @property
    def rsd_pct(self) -> float:
        """Relative standard deviation in percent"""
        if len(self.samples_ns) < 2 or self.mean_ns == 0:
            return 0.0
        return statistics.stdev(self.samples_ns) / self.mean_ns * 100.0


@dataclass(frozen=True)
class BenchRecord:
    experiment: str
    param: Any
    fused_ns: float
    unfused_ns: float
    rsd_pct: float

    @property
    def speedup(self) -> float:
        return self.unfused_ns / self.fused_ns if self.fused_ns else float('inf')

    def as_row(self) -> List[str]:
        return [
            self.experiment,
            str(self.param),
            f"{self.fused_ns:.0f}",
            f"{self.unfused_ns:.0f}",
            f"{self.speedup:.4f}",
            f"{self.rsd_pct:.2f}",
        ]


def time_runs(fn: Callable[[], Any], repeats: int, warmup: int = 0) -> Timing:
    """Call fn warmup + repeats times; only the last `repeats` calls are kept"""
    if repeats < MIN_REPEATS:
        raise ValueError(f"repeats must be >= {MIN_REPEATS}, got {repeats}")
    for _ in range(warmup):
        fn()
    samples = []
    gc_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            start = time.perf_counter_ns()
            fn()
            samples.append(time.perf_counter_ns() - start)
    finally:
        if gc_enabled:
            gc.enable()
    return Timing(samples)


def make_record(experiment: str, param: Any, fused: Timing, unfused: Timing) -> BenchRecord:
    """The row's RSD is the larger of the two strategies' RSDs"""
    return BenchRecord(
        experiment=experiment,
        param=param,
        fused_ns=fused.mean_ns,
        unfused_ns=unfused.mean_ns,
        rsd_pct=max(fused.rsd_pct, unfused.rsd_pct),
    )
