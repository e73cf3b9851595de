"""Exception types raised across the package."""


class ConeBoundsError(Exception):
    """Base class for all package errors."""


class DomainError(ConeBoundsError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class UnsupportedModelError(ConeBoundsError, NotImplementedError):
    """The structure model does not support the requested operation."""


class DegenerateAnchorError(DomainError):
    """The anchor point minimizes the regularizer (x0 = 0 for a norm).

    The tangent cone of a norm at the origin is the whole space, so widths
    and error bounds computed from it are meaningless.
    """


class NumericalError(ConeBoundsError, ArithmeticError):
    """A numerical routine failed; ``diagnostics`` carries the details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InfeasibleError(ConeBoundsError):
    """The requested constraint set is empty."""
