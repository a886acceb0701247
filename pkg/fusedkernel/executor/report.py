"""
Execution report with traffic and allocation accounting
"""

from dataclasses import dataclass


@dataclass
class ExecReport:
    """
    Counters of one execution. bytes_read / bytes_written count logical
    element traffic of Read and Write ops, not cache lines.
    """
    wall_time_ns: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    intermediate_bytes_allocated: int = 0
    passes: int = 0
    points_visited: int = 0

    @property
    def total_traffic(self) -> int:
        return self.bytes_read + self.bytes_written

    def absorb(self, other: 'ExecReport') -> None:
        """Add another pass's counters into this report"""
        self.wall_time_ns += other.wall_time_ns
        self.bytes_read += other.bytes_read
        self.bytes_written += other.bytes_written
        self.intermediate_bytes_allocated += other.intermediate_bytes_allocated
        self.passes += other.passes
        self.points_visited += other.points_visited
