"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition."""


class ResourceLimitError(RuntimeError):
    """A request exceeds the desk-scale resource guard."""
