"""Exception and warning types shared across the package."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class DataError(ValueError):
    """Input data (basis values, node values, models) is unusable."""


class DegenerateTruncationError(ValueError):
    """A truncated kernel row carries no mass."""


class ConditioningError(ArithmeticError):
    """The mass matrix is numerically singular."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class UndeterminedError(ArithmeticError):
    """A fit or verdict could not be decided; ``diagnostics`` says why."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DomainError(ValueError):
    """The basis does not lie in a domain where the operation is exact."""


class ResolutionWarning(UserWarning):
    """Quadrature is too coarse for the requested frequency content."""
