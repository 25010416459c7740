"""Exception hierarchy shared by all modules."""


class LipsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LipsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """Value not attainable by a monotone map (e.g. p too large for blow_down)."""


class EscapeError(LipsError):
    """An orbit leaves the monitored section or the extension margin of f."""


class DegeneracyError(LipsError):
    """The problem is degenerate (affine f with p = 1, vanishing residual)."""


class NumericalError(LipsError, RuntimeError):
    """An iterative method failed to converge within its budget."""


class OutOfScopeError(LipsError):
    """The request belongs to a different part of the parameter space."""
