"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceLimitError(RuntimeError):
    """A request would exceed a configured size or memory budget."""


class InvariantViolation(ArithmeticError):
    """A computed value broke a documented invariant."""


class UsageError(ValueError):
    """Malformed user input, typically from the command line or a profile file."""
