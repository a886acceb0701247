"""
Exception hierarchy for the fused kernel library
"""

from typing import Any, Optional


class FusedKernelError(Exception):
    """Base class for every error raised by the library"""

    provenance: Optional[str] = None
    handle_index: Optional[int] = None

    def attach_provenance(self, provenance: str,
                          handle_index: Optional[int] = None) -> 'FusedKernelError':
        """
        Name the user-level handle responsible for this error.
        handle_index is the 0-based position in the handle list; messages
        count handles from 1.
        """
        message = getattr(self, 'message', None) or (str(self.args[0]) if self.args else '')
        self.message = message
        self.provenance = provenance
        self.handle_index = handle_index
        if handle_index is None:
            self.args = (f"{provenance}: {message}",)
        else:
            self.args = (f"handle #{handle_index + 1} ({provenance}): {message}",)
        return self


class ConfigError(FusedKernelError, ValueError):
    """Invalid execution configuration"""


# tensor

class PlaneBoundsError(FusedKernelError, IndexError):
    """Element access outside a plane"""


class CapacityOverflowError(FusedKernelError, OverflowError):
    """Requested plane does not fit in addressable memory"""


class TensorFormatError(FusedKernelError, ValueError):
    """Malformed FKT file"""


class BadMagicError(TensorFormatError):
    pass


class UnknownKindError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


class BadExtentsError(TensorFormatError):
    pass


# ops_core

class ParamsError(FusedKernelError, ValueError):
    """Parameters do not conform to the operation's schema"""


class ChainError(FusedKernelError, ValueError):
    """A list of IOps that cannot form a Pipeline"""

    def __init__(self, message: str, position: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.position = position


class EmptyChainError(ChainError):
    pass


class FirstNotReadError(ChainError):
    pass


class LastNotWriteError(ChainError):
    pass


class KindMismatchError(ChainError):
    def __init__(self, position: int, expected: Any, found: Any):
        super().__init__(
            f"kind mismatch at position {position}: expected {expected}, found {found}",
            position,
        )
        self.expected = expected
        self.found = found


class DimsMismatchError(ChainError):
    pass


class MissingDimsError(ChainError):
    pass


class ChainTooLongError(ChainError):
    pass


# ops_library

class DivByZeroParamError(ParamsError):
    pass


class UnsupportedCastError(ParamsError):
    pass


class CropOutOfBoundsError(ParamsError):
    pass


class UnsupportedKindError(ParamsError):
    pass


class PlaneExtentMismatchError(ParamsError):
    pass


class EmptyBatchError(ParamsError):
    pass


class InnerKindMismatchError(ParamsError):
    pass


# dpp

class EmptyIterSpaceError(FusedKernelError, ValueError):
    pass


# highlevel_api

class HeterogeneousBatchError(FusedKernelError, ValueError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"batch plane #{index}: {reason}")
        self.index = index


# bench

class EqualityGateError(FusedKernelError):
    """Fused and unfused outputs differ; timings would be meaningless"""
