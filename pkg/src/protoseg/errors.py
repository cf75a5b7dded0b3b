"""Exception hierarchy shared across the package.

Every error raised on a data path derives from :class:`ProtoSegError` so the
CLI can map them to a single "data error" exit code.  Most classes also derive
from the matching builtin (``ValueError``, ``IndexError``) so callers that do
not know about this package still catch something sensible.
"""


class ProtoSegError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(ProtoSegError, ValueError):
    """Operands disagree on spatial or channel dimensions."""


class NonFiniteValueError(ProtoSegError, ValueError):
    """An input tensor contains NaN or Inf."""


class EmptyClassError(ProtoSegError, ValueError):
    """A class has no member pixels, so its prototype is undefined."""

    def __init__(self, class_index: int, message: str | None = None):
        self.class_index = class_index
        super().__init__(message or f"class {class_index} has no member pixels")


class UnitIndexError(ProtoSegError, IndexError):
    """Requested channel/unit index lies outside the feature map."""


class TooFewUnitsError(ProtoSegError, ValueError):
    """The active/inertia split needs at least two defined scores."""


class EmptyInputError(ProtoSegError, ValueError):
    """An aggregate was requested over an empty collection."""


class UndefinedScoreError(ProtoSegError, ValueError):
    """Arithmetic was attempted on an undefined score."""


class SyntheticSpecError(ProtoSegError, ValueError):
    """A synthetic-data spec has out-of-range fields."""


class TensorFormatError(ProtoSegError, ValueError):
    """Base class for tensor-dump format errors."""


class MalformedHeaderError(TensorFormatError):
    """Dump header is not well formed; the message names the byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class TruncatedPayloadError(TensorFormatError):
    """Dump payload is shorter than the header's shape demands."""


class UnsupportedDtypeError(TensorFormatError):
    """Dump declares a dtype outside the supported set (float32, uint8)."""


class ShapeOverflowError(TensorFormatError):
    """Dump header declares a shape whose element count is implausible."""


class ManifestError(ProtoSegError, ValueError):
    """Base class for analysis-manifest errors."""


class SchemaViolationError(ManifestError):
    """Manifest document violates the schema; carries the offending field path."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class DanglingReferenceError(ManifestError):
    """Manifest references a file that does not exist."""

    def __init__(self, field_path: str, missing_path: str):
        self.field_path = field_path
        self.missing_path = missing_path
        super().__init__(f"{field_path}: referenced file not found: {missing_path}")
