"""Exception hierarchy.

``InputError`` covers malformed input (CLI exit code 2); ``PreconditionError``
covers well-formed input on which an analysis is not defined (exit code 3).
"""


class GcaError(Exception):
    pass


class InputError(GcaError):
    pass


class GraphFormatError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PathError(InputError):
    pass


class PreconditionError(GcaError):
    """An analysis was requested outside the regime where it is defined."""

    code = "precondition"


class NwEmptyError(PreconditionError):
    code = "nw-empty"


class NotIrreducibleError(PreconditionError):
    code = "not-irreducible"


class NoSignChangeError(PreconditionError):
    code = "no-sign-change"


class NotConservativeError(PreconditionError):
    code = "not-conservative"


class NotSimpleError(PreconditionError):
    code = "not-simple"


class HarmonicExtensionError(PreconditionError):
    """Raised when no strictly positive harmonic vector exists.

    ``candidate`` holds the best nonnegative vector found (or None) so callers
    can still inspect it.
    """

    code = "no-positive-harmonic"

    def __init__(self, message: str, candidate=None):
        super().__init__(message)
        self.candidate = candidate


class NotHarmonicError(PreconditionError):
    code = "not-harmonic"


class ZeroGroupError(PreconditionError):
    code = "zero-group"
