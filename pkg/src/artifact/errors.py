"""Exception types shared across the package."""

from __future__ import annotations


class ContractViolation(ValueError):
    """An input broke a documented precondition."""


class ResourceLimitError(ValueError):
    """A request exceeds a configured size cap."""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class AccuracyError(RuntimeError):
    """A numerical routine could not reach its tolerance.

    The best estimate obtained so far is kept on the exception so callers
    can still report it.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class InvalidPairingError(ContractViolation):
    """A Wick pairing matched two fields of the same type."""


class StructureError(ValueError):
    """A series violates the N^(2-2g) genus structure."""


class DegenerateFitError(ValueError):
    """A growth fit was requested on data with no usable points."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""
