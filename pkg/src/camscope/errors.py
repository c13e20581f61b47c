"""Exception types shared across the package.

Every error that can cross the HTTP boundary carries a stable machine-readable
``code`` so the service layer can map it to exactly one API error.
"""


class CamscopeError(Exception):
    """Base class for all package errors."""

    code = "internal-error"


class ContractViolationError(CamscopeError, ValueError):
    """An operation was called with arguments violating its contract
    (shape mismatch, bad range, inconsistent lengths)."""

    code = "contract-violation"


class NumericError(CamscopeError, ArithmeticError):
    """A computation produced non-finite values."""

    code = "numeric-error"


class EmptyInputError(CamscopeError, ValueError):
    """An operation that needs at least one element received none."""

    code = "empty-input"


class EmptyClassError(CamscopeError, LookupError):
    """No sample was predicted as the requested class."""

    code = "empty-class"


class EmptySelectionError(CamscopeError, ValueError):
    """A range filter would leave no active samples; the filter is rejected."""

    code = "empty-selection"


class UnknownMethodError(CamscopeError, ValueError):
    """An aggregation or variability method name is not recognized."""

    code = "unknown-method"


class UnsupportedFormatError(CamscopeError, ValueError):
    """A byte stream is not in a supported file format."""

    code = "unsupported-format"


class MalformedFrameError(CamscopeError, ValueError):
    """A captured frame is too short to contain the expected headers."""

    code = "malformed-frame"


class WeightFormatError(CamscopeError, ValueError):
    """A weight file failed validation (bad shapes, non-finite values,
    unknown format tag)."""

    code = "weight-format"


class PacketSkipped(CamscopeError):
    """Control-flow signal: a packet cannot become a sample (e.g. non-IPv4).

    Carries a ``reason`` string used for per-reason skip counters; never
    surfaced as an API error.
    """

    code = "packet-skipped"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason
