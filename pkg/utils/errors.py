"""
Exception hierarchy for the vision-span laboratory.
Every error raised by the library derives from VisionSpanError.
"""
from typing import Optional


class VisionSpanError(Exception):
    """Base class for all library errors."""


# === Numeric core ===

class ShapeError(VisionSpanError, ValueError):
    """Operand dimensions do not agree."""


class DomainError(VisionSpanError, ArithmeticError):
    """A function was evaluated outside its domain (e.g. log of a non-positive value)."""


class NumericError(VisionSpanError, ArithmeticError):
    """A non-finite value was produced by an operation."""

    def __init__(self, op: str, detail: str = "non-finite value"):
        self.op = op
        super().__init__(f"{detail} produced by '{op}'")


class EmptyWindowError(VisionSpanError, ValueError):
    """A masked softmax was asked to normalise over zero positions."""


# === Model / checkpoint ===

class IdRangeError(VisionSpanError, ValueError):
    """A token id falls outside its vocabulary."""


class LengthError(VisionSpanError, ValueError):
    """A sequence is empty or longer than the configured maximum."""


class CheckpointParseError(VisionSpanError, ValueError):
    """A checkpoint file could not be parsed."""

    def __init__(self, message: str, line: int, offset: Optional[int] = None):
        self.line = line
        self.offset = offset
        where = f"line {line}" if offset is None else f"line {line}, offset {offset}"
        super().__init__(f"{message} ({where})")


class CheckpointIntegrityError(VisionSpanError, ValueError):
    """Checkpoint contents disagree with its own header."""


# === Data ===

class CorpusParseError(VisionSpanError, ValueError):
    """A corpus line is malformed."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")


class TaskSpecError(VisionSpanError, ValueError):
    """Synthetic task settings cannot be satisfied."""


class SplitError(VisionSpanError, ValueError):
    """Split ratios are degenerate."""


# === Training / decoding ===

class UnsupportedModeError(VisionSpanError, ValueError):
    """The operation is not defined for the model's attention kind."""


class DivergenceError(VisionSpanError, ArithmeticError):
    """Training produced a non-finite loss."""


class EmptyBatchError(VisionSpanError, ValueError):
    """A batch or corpus with no samples was supplied."""


# === Configuration ===

class ConfigError(VisionSpanError, ValueError):
    """Unknown or invalid configuration key."""
