"""Exception types raised by the toolkit."""


class OodkitError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(OodkitError):
    """Input violates a documented precondition (shape, finiteness, range)."""


class EmptyClassError(OodkitError):
    """A class index has no training samples, so no prototype can be formed."""

    def __init__(self, class_index: int):
        super().__init__(f"class {class_index} has no training samples")
        self.class_index = class_index


class TrainingDivergedError(OodkitError):
    """Gradient descent on the toy model produced a non-finite loss."""


class FormatError(OodkitError):
    """Base class for file parsing and serialization errors."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class BadVersionError(FormatError):
    """File declares an unsupported format version."""


class TruncatedPayloadError(FormatError):
    """File ends before the declared payload is complete."""


class TrailingBytesError(FormatError):
    """File contains bytes beyond the declared payload."""


class PayloadTooLargeError(FormatError):
    """Declared payload exceeds the reader's allocation cap."""


class NonFiniteValueError(FormatError):
    """Decoded payload contains NaN or infinity."""


class CsvParseError(FormatError):
    """CSV cell or row cannot be parsed; carries the offending position."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
        self.row = row
        self.column = column
