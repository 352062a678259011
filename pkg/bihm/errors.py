"""Exceptions and warnings raised by bihm.

Every error carries a short ``kind`` used by the command line to print a
single machine-parseable line.
"""
from typing import Optional


class BihmError(Exception):
    """Base class for all bihm errors."""
    kind = "error"


class ShapeError(BihmError, ValueError):
    """An array does not have the dimensions the model expects."""
    kind = "shape"


class ArgumentError(BihmError, ValueError):
    """An argument is outside its valid range."""
    kind = "argument"


class EnumerationLimitError(BihmError):
    """Exhaustive enumeration was refused because it would exceed the bit cap."""
    kind = "enumeration-limit"

    def __init__(self, requested: int, allowed: int, what: str = "total") -> None:
        super().__init__(f"enumeration of {requested} {what} bits exceeds the limit of {allowed}")
        self.requested = requested
        self.allowed = allowed


class TrainingDivergedError(BihmError):
    """Parameters became non-finite during training."""
    kind = "diverged"

    def __init__(self, parameter: str, updates: int) -> None:
        super().__init__(f"non-finite values in {parameter} after {updates} updates")
        self.parameter = parameter
        self.updates = updates


class FormatError(BihmError):
    """A file does not follow its format."""
    kind = "format"

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None,
                 offset: Optional[int] = None) -> None:
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.path = path
        self.line = line
        self.offset = offset


class BadMagicError(FormatError):
    """The leading magic bytes are wrong."""
    kind = "bad-magic"


class UnsupportedVersionError(FormatError):
    """The format version is not understood."""
    kind = "unsupported-version"


class TruncationError(FormatError):
    """The file ends before the declared content."""
    kind = "truncation"

    def __init__(self, expected: int, actual: int, path: Optional[str] = None) -> None:
        super().__init__(f"expected {expected} bytes, found {actual}", path=path, offset=actual)
        self.expected = expected
        self.actual = actual


class SizeMismatchError(FormatError):
    """Declared sizes disagree with each other or with the file length."""
    kind = "size-mismatch"


class DegenerateWeightsWarning(UserWarning):
    """All importance weights were zero (log weight of -inf)."""
