"""
Byte and element accounting for plane buffers
"""

import threading
from typing import List


class MemoryLedger:
    """Tracks bytes held by live plane buffers allocated through plane_alloc"""

    def __init__(self):
        self._lock = threading.Lock()
        self._live_bytes = 0
        self._total_bytes = 0
        self._allocations = 0

    def record(self, nbytes: int) -> None:
        with self._lock:
            self._live_bytes += nbytes
            self._total_bytes += nbytes
            self._allocations += 1

    def release(self, nbytes: int) -> None:
        with self._lock:
            self._live_bytes -= nbytes

    @property
    def live_bytes(self) -> int:
        return self._live_bytes

    @property
    def total_bytes(self) -> int:
        """Bytes ever allocated, freed or not"""
        return self._total_bytes

    @property
    def allocations(self) -> int:
        return self._allocations


class ElementCounter:
    """
    Counts element fetches performed by Read operations.

    Each thread increments its own cell, so workers never contend; the total is
    the sum over all cells at the time it is read.
    """

    def __init__(self):
        self._local = threading.local()
        self._cells: List[List[int]] = []
        self._cells_lock = threading.Lock()

    def _cell(self) -> List[int]:
        cell = getattr(self._local, 'cell', None)
        if cell is None:
            cell = [0]
            self._local.cell = cell
            with self._cells_lock:
                self._cells.append(cell)
        return cell

    def add(self, count: int) -> None:
        self._cell()[0] += count

    @property
    def total(self) -> int:
        with self._cells_lock:
            return sum(cell[0] for cell in self._cells)

    def reset(self) -> None:
        with self._cells_lock:
            for cell in self._cells:
                cell[0] = 0


memory_ledger = MemoryLedger()
element_reads = ElementCounter()
