"""Exception types shared across the package."""


class CouplingLabError(Exception):
    """Base class for all package errors."""


class InvalidPopulation(CouplingLabError, ValueError):
    pass


class InvalidArgument(CouplingLabError, ValueError):
    pass


class InstanceTooLarge(CouplingLabError):
    """Exact enumeration would exceed the configured branch budget."""

    def __init__(self, estimate: int, budget: int):
        self.estimate = estimate
        self.budget = budget
        super().__init__(
            f"exact enumeration needs about {estimate} branches, budget is {budget}"
        )


class SupportMismatch(CouplingLabError, ValueError):
    pass


class DomainError(CouplingLabError, ArithmeticError):
    pass
