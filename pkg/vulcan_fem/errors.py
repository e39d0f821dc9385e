"""
vulcan_fem/errors.py

This module defines the exception hierarchy shared by every vulcan_fem component. Each error
carries a stable, machine-parsable code and the process exit status the command-line interface
uses when the error terminates a run.

Classes:
    - VulcanFemError: Base class with code, exit status and structured details.
    - ConfigurationError, DomainError, UnsupportedDegreeError, IncompressibleMaterialError,
      InvertedElementError, MeshGenerationError, CapacityError, SharedMemoryExhaustedError,
      ContractViolationError, VerificationFailedError.
"""

from typing import Any, Dict


class VulcanFemError(Exception):
    """
    Base class for all errors raised by vulcan_fem.

    Attributes:
        code (str): Stable identifier printed by the CLI.
        exit_code (int): Process exit status used by the CLI.
        details (Dict[str, Any]): Structured context (element ids, sizes, paths).
    """

    code = "VULCAN_FEM_ERROR"
    exit_code = 1

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """
        Returns the error as a JSON-ready payload.

        Returns:
            Dict[str, Any]: Mapping with the error code, message and details.
        """

        return {"error": self.code, "message": self.message, "details": self.details}


class ConfigurationError(VulcanFemError):
    """Inconsistent or invalid configuration (profiles, run settings, mismatched inputs)."""

    code = "CONFIGURATION_ERROR"
    exit_code = 2


class DomainError(VulcanFemError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    code = "DOMAIN_ERROR"
    exit_code = 3


class UnsupportedDegreeError(DomainError):
    """No triangle quadrature rule is tabulated for the requested degree."""

    code = "UNSUPPORTED_DEGREE"


class IncompressibleMaterialError(DomainError):
    """Poisson ratio of exactly 0.5 makes the first Lame parameter infinite."""

    code = "INCOMPRESSIBLE_MATERIAL"


class InvertedElementError(VulcanFemError):
    """
    The Jacobian determinant of an element is not positive.

    The details always hold ``element_id`` and the reference point ``xi`` where the
    determinant was evaluated.
    """

    code = "INVERTED_ELEMENT"
    exit_code = 4


class MeshGenerationError(VulcanFemError):
    """A generated mesh violates the positive-determinant requirement."""

    code = "MESH_GENERATION"
    exit_code = 4


class CapacityError(VulcanFemError):
    """A device limit (allocation size, thread count) cannot hold the requested work."""

    code = "CAPACITY_EXCEEDED"
    exit_code = 5


class SharedMemoryExhaustedError(CapacityError):
    """The shared-memory budget cannot hold one block per thread."""

    code = "SHARED_MEMORY_EXHAUSTED"


class ContractViolationError(VulcanFemError):
    """Kernel buffers or plans disagree with each other."""

    code = "CONTRACT_VIOLATION"
    exit_code = 6


class VerificationFailedError(VulcanFemError):
    """One or more verification checks exceeded their tolerance."""

    code = "VERIFICATION_FAILED"
    exit_code = 7
