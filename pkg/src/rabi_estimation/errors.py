"""Exception types raised across the package."""

from __future__ import annotations


class EstimationError(Exception):
    """Base class for all errors raised by :mod:`rabi_estimation`."""


class InvalidParameterError(EstimationError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class InvalidStateError(EstimationError, ValueError):
    """A qubit state is not normalized or contains non-finite amplitudes."""


class DegenerateUpdateError(EstimationError, ArithmeticError):
    """The estimate has zero probability for the observed outcome."""

    def __init__(self, message: str, trajectory: int | None = None):
        if trajectory is not None:
            message = f"trajectory {trajectory}: {message}"
        super().__init__(message)
        self.trajectory = trajectory


class DegenerateGeometryError(EstimationError, ArithmeticError):
    """The closed-form fidelity increment has a vanishing denominator."""


class DomainError(EstimationError, ValueError):
    """A fidelity or time argument lies outside the function's domain."""


class InvalidCoordinatesError(EstimationError, ValueError):
    """Fidelity and relative half-angle are inconsistent."""


class InvalidWindowError(EstimationError, ValueError):
    """An averaging window selects no samples."""
