"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UndefinedEstimate(ValueError):
    """A frequency estimate was requested from an empty group."""


class UndefinedStatistic(ArithmeticError):
    """A test statistic cannot be evaluated for the given counts.

    ``reason`` is a short machine-readable code (for example
    ``"monomorphic"`` or ``"nonpositive_variance"``) that pipelines write
    into their output instead of a number.
    """

    def __init__(self, reason, message=None):
        self.reason = reason
        super().__init__(message or reason)


class InfeasibleModel(ValueError):
    """A disease model / marker combination violates a probability bound."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ProtocolError(ValueError):
    """A simulation plan does not satisfy the protocol of the requested study."""
