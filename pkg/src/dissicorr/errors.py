"""Exception hierarchy. ``category`` drives the CLI exit code and message prefix."""


class DissicorrError(Exception):
    category = "NUMERIC"


class DomainError(DissicorrError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class InvalidCouplingError(DomainError):
    """Zero (or non-finite) gyromagnetic coupling."""


class NumericalOverflowError(DissicorrError, ArithmeticError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UnderflowError(DissicorrError, ArithmeticError):
    pass


class SingularFieldError(DissicorrError):
    """A synthesized control field diverges at some instant."""

    category = "SINGULAR"

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DegenerateConditionsError(SingularFieldError):
    """Boundary conditions do not determine a unique polynomial."""


class ConfigError(DissicorrError):
    category = "CONFIG"
