"""Exception types shared across the toolkit."""


class SiltError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SiltError, ValueError):
    """Bad input: out-of-range parameter, malformed spec string, unknown name."""


class GridMismatchError(ValidationError):
    """Two objects that must live on the same grid / aux dimension do not."""


class DegenerateConfigurationError(SiltError, ArithmeticError):
    """A Gram matrix is numerically singular (time tuple too close to a diagonal)."""


class ConsistencyError(SiltError, ArithmeticError):
    """An internal dual-path self-check failed, signalling ill-conditioning."""
