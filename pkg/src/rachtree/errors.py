"""Exception hierarchy."""


class RachError(Exception):
    pass


class ConfigError(RachError, ValueError):
    """Invalid configuration. ``violations`` lists every broken invariant."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DivisibilityError(ConfigError):
    pass


class LayoutError(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class DomainError(RachError, ValueError):
    pass


class IllegalTransition(RachError, RuntimeError):
    pass


class NonTermination(RachError, RuntimeError):
    pass


class EmptySetError(RachError, ValueError):
    pass


class InsufficientRuns(RachError, ValueError):
    pass


class ConfigMismatch(RachError, ValueError):
    pass
