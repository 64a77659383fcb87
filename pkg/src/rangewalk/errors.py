"""Exception types shared across the package."""


class RangewalkError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(RangewalkError):
    """Invalid user input: bad parameters, malformed measures, degenerate cases."""


class DescriptorMismatchError(ValidationError):
    """Operands belong to different groups."""


class UnsupportedGroupError(ValidationError):
    """Operation is not defined for this group kind."""


class ResourceLimitError(RangewalkError):
    """A configured state/outcome cap was exceeded."""

    def __init__(self, limit_name: str, limit_value: int, needed: int):
        self.limit_name = limit_name
        self.limit_value = limit_value
        self.needed = needed
        super().__init__(
            f"{limit_name} limit exceeded: needed {needed}, cap is {limit_value}"
        )


class StructuralError(RangewalkError):
    """A digraph violates the generated-by-a-walk preconditions (e.g. unreachable vertex)."""


class MalformedCodeError(RangewalkError):
    """A trace code is internally inconsistent and cannot be decoded."""


class NotEscapingError(ValidationError):
    """Skip-free analysis requires strictly negative drift."""


class UnknownTailError(ValidationError):
    """The tail of an infinite-support measure is not certified."""


class PrecisionError(RangewalkError):
    """A computation cannot reach the requested accuracy with the given truncation."""


class CertificateError(RangewalkError):
    """No certificate (e.g. positive grading) is available for the requested check."""


class PredictionError(RangewalkError):
    """A prediction was requested for an Unknown walk class."""


class InternalConsistencyError(RangewalkError):
    """Two code paths that must agree did not; indicates a bug, not bad input."""
