"""Exception and warning types shared across the package."""


class StylemaskError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StylemaskError):
    """An input violates a documented precondition or invariant."""


class FormatError(StylemaskError):
    """A file is not a recognizable embedding container."""


class TruncationError(FormatError):
    """A binary payload is shorter or longer than its header promises."""


class CapacityError(StylemaskError):
    """An exhaustive computation would exceed its hard size bound."""


class ZeroNormWarning(UserWarning):
    """A zero-norm vector hit a normalization or calibration step."""


class DegenerateClusterWarning(UserWarning):
    """Fewer distinct values than requested clusters; cluster count reduced."""
