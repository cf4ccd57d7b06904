"""Exception types raised across the package."""


class DdkError(Exception):
    """Base class for all package errors."""


class DimensionError(DdkError, ValueError):
    pass


class DomainError(DdkError, ValueError):
    pass


class UnsupportedDegreeError(DdkError, ValueError):
    pass


class InsufficientKnotsError(DdkError, ValueError):
    pass


class SaturatedError(DdkError, RuntimeError):
    """No admissible knot candidate is left."""


class TooFewCurvesError(DdkError, ValueError):
    pass


class TooShortError(DdkError, ValueError):
    pass


class ContractViolation(DdkError, ValueError):
    pass


class RangeError(DdkError, IndexError):
    pass


class ResolutionError(DdkError, ValueError):
    pass


class NotPSDError(DdkError, ArithmeticError):
    pass


class UnsupportedGridError(DdkError, ValueError):
    pass


class ConfigError(DdkError, ValueError):
    """Malformed or inconsistent experiment configuration."""
