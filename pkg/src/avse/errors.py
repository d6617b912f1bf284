"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: usage problems exit 1, data problems
(files, formats, degenerate signals) exit 2, numeric failures exit 3.
"""


class AvseError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(AvseError):
    """Tensor extents inconsistent with the operation's contract."""


class InputTooShortError(ShapeError):
    """Input smaller than the kernel / minimum analysis length."""


class EmptySequenceError(ShapeError):
    """A sequence axis of length zero where at least one step is required."""


class ConfigError(AvseError):
    """Invalid configuration value or combination."""


class DataError(AvseError):
    """Problems with external data: files, formats, signal content."""


class UnsupportedFormatError(DataError):
    """File is readable but not in the supported encoding."""


class CorruptFileError(DataError):
    """File violates its own format's internal consistency rules."""


class CorruptCheckpointError(CorruptFileError):
    """Checkpoint bytes inconsistent with the embedded configuration."""


class ManifestError(DataError):
    """Manifest line failed to parse or validate; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"manifest line {line_no}: {message}")
        self.line_no = line_no


class DegenerateSignalError(DataError):
    """Signal has no usable energy for the requested operation."""


class InsufficientSignalError(DataError):
    """Signal too short for the metric's minimum analysis window."""


class NumericError(AvseError):
    """Non-finite values or a failed numeric invariant at runtime."""
