"""
Thread coarsening plan
"""

from dataclasses import dataclass
from enum import Enum

from fusedkernel.errors import ConfigError

ALLOWED_BLOCKS = (1, 2, 4, 8, 16)


class TailPolicy(Enum):
    SCALAR = "scalar"          # leftover columns run through the fused kernel one element wide
    POINTWISE = "pointwise"    # leftover columns run point by point on the dynamic path


@dataclass(frozen=True)
class CoarseningPlan:
    """Number of adjacent x elements handled per logical task"""
    block: int = 1
    tail_policy: TailPolicy = TailPolicy.SCALAR

    def __post_init__(self):
        if self.block not in ALLOWED_BLOCKS:
            raise ConfigError(f"Coarsening block must be one of {ALLOWED_BLOCKS}, got {self.block}")
        object.__setattr__(self, 'tail_policy', TailPolicy(self.tail_policy))

    def split(self, span: int):
        """(body, tail) column counts for a span of `span` columns"""
        tail = span % self.block
        return span - tail, tail
