"""
Execution configuration management for the fused kernel library
Supports named presets and environment overrides
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional

from fusedkernel.dpp.coarsening import ALLOWED_BLOCKS, CoarseningPlan, TailPolicy
from fusedkernel.errors import ConfigError
from fusedkernel.executor.pool import hardware_workers

DEFAULT_CHUNK_ROWS = 8


@dataclass
class ExecConfig:
    """Parallel runtime configuration"""
    workers: int = 0
    coarsening: CoarseningPlan = field(default_factory=CoarseningPlan)
    chunk_rows: int = DEFAULT_CHUNK_ROWS

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ConfigError("; ".join(errors))

    def validate(self) -> List[str]:
        """Return a list of configuration problems"""
        errors = []
        if not isinstance(self.workers, int) or self.workers < 0:
            errors.append("workers must be a non-negative integer (0 = hardware default)")
        if not isinstance(self.chunk_rows, int) or self.chunk_rows < 1:
            errors.append("chunk_rows must be >= 1")
        if not isinstance(self.coarsening, CoarseningPlan):
            errors.append("coarsening must be a CoarseningPlan")
        return errors

    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else hardware_workers()

    @classmethod
    def from_env(cls) -> 'ExecConfig':
        """Create execution config from environment variables"""
        block = int(os.getenv('FK_COARSEN_BLOCK', '1'))
        if block not in ALLOWED_BLOCKS:
            raise ConfigError(f"FK_COARSEN_BLOCK must be one of {ALLOWED_BLOCKS}, got {block}")
        return cls(
            workers=int(os.getenv('FK_WORKERS', '0')),
            coarsening=CoarseningPlan(block, TailPolicy(os.getenv('FK_COARSEN_TAIL', 'scalar'))),
            chunk_rows=int(os.getenv('FK_CHUNK_ROWS', str(DEFAULT_CHUNK_ROWS))),
        )

    def describe(self) -> dict:
        return {
            'threads': self.resolved_workers(),
            'chunk_rows': self.chunk_rows,
            'coarsen': self.coarsening.block,
            'tail': self.coarsening.tail_policy.value,
        }


# Default configurations for different environments
DEFAULT_CONFIGS = {
    'development': ExecConfig(workers=0, chunk_rows=DEFAULT_CHUNK_ROWS),
    'testing': ExecConfig(workers=2, chunk_rows=4),
    'benchmark': ExecConfig(workers=0, chunk_rows=DEFAULT_CHUNK_ROWS),
}


def get_config(environment: Optional[str] = None) -> ExecConfig:
    """Get execution configuration for specified environment"""
    if environment and environment in DEFAULT_CONFIGS:
        return DEFAULT_CONFIGS[environment]
    return ExecConfig.from_env()
