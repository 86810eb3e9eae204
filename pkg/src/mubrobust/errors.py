"""Exception hierarchy shared by the library and the command line."""


class MubError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class InvalidInputError(MubError, ValueError):
    exit_code = 2


class BudgetExceededError(MubError):
    """A computation would exceed its configured enumeration or size budget."""

    exit_code = 3


class NumericalError(MubError, ArithmeticError):
    """Non-convergence, ill-conditioning or a failed numerical consistency check."""

    exit_code = 4


class ZeroDenominatorError(NumericalError):
    """Every measurement is proportional to the identity, so no bound is defined."""


class NotAParentError(NumericalError):
    """A candidate parent measurement fails normalisation or the marginal test."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
