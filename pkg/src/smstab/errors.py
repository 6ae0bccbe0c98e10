"""Exception hierarchy shared by the analysis modules and the CLI."""


class SmstabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SmstabError, ValueError):
    """An input lies outside the domain of a function (non-finite angle, ...)."""


class SingularVelocityError(SmstabError, ZeroDivisionError):
    """A torque expression was evaluated at zero rotor speed."""


class InsufficientDataError(SmstabError, ValueError):
    pass


class ConfigError(SmstabError, ValueError):
    pass


class NumericFailure(SmstabError, ArithmeticError):
    """An iterative kernel hit its iteration cap or step-size floor.

    ``partial`` carries whatever was computed before the failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class StiffnessError(NumericFailure):
    pass


class InconsistencyError(SmstabError, RuntimeError):
    """Two routes that must agree did not (residual check, oracle cross-check)."""
