"""
Partitioning of an iteration space into (plane, row-chunk) tasks
"""

from typing import List, NamedTuple, Tuple

from fusedkernel.config.execution_config import ExecConfig


class Task(NamedTuple):
    z: int
    y_begin: int
    y_end: int


def schedule(iter_space: Tuple[int, int, int], config: ExecConfig) -> List[Task]:
    """Disjoint z-major tasks of at most chunk_rows rows covering the whole space"""
    _, height, batch = iter_space
    step = config.chunk_rows
    return [
        Task(z, y, min(y + step, height))
        for z in range(batch)
        for y in range(0, height, step)
    ]
