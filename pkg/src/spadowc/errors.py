"""Exception hierarchy shared by all spadowc modules."""


class SpadOwcError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SpadOwcError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ModelDomainError(DomainError):
    """An operating point is outside the validity range of the detector model."""


class InfeasibleLinkError(SpadOwcError):
    """Background light alone saturates the array, so no signal can be sent."""


class NumericError(SpadOwcError, ArithmeticError):
    """Base class for failures of an iterative or closed-form numerical step."""


class BracketError(NumericError):
    """A root-finding bracket does not enclose a sign change."""


class ConvergenceError(NumericError):
    """An iteration hit its iteration cap before reaching the tolerance."""


class DesignError(NumericError):
    """A constellation design could not be completed."""


class OrderingError(SpadOwcError, ValueError):
    """Constellation means are not strictly increasing."""


class ConfigError(SpadOwcError, ValueError):
    """An experiment configuration is malformed or out of range."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
