"""Exception types shared across the package."""


class PhnlsError(Exception):
    """Base class for all package errors."""


class InvalidArgument(PhnlsError, ValueError):
    """An argument is outside its documented domain."""


class ShapeError(PhnlsError, ValueError):
    """An array argument has the wrong shape or length."""


class ResolutionError(PhnlsError):
    """The discretization cannot resolve the requested computation."""


class NumericalError(PhnlsError):
    """Non-finite data was produced or encountered."""


class Unsupported(PhnlsError):
    """The requested parameter range is outside the implemented cap."""


class EmptySample(PhnlsError):
    """A ratio experiment received identically-zero input."""


class BlowUpDetected(PhnlsError):
    """The H^1 norm exceeded the blow-up guard during time stepping."""


class AssumptionViolated(PhnlsError):
    """A standing assumption (bounded H^1) failed during a growth run."""
