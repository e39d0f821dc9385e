# tests/test_errors.py
import json

import pytest

from vulcan_fem.encoder import Encoder
from vulcan_fem.errors import (CapacityError, ConfigurationError, ContractViolationError,
                               DomainError, IncompressibleMaterialError, InvertedElementError,
                               MeshGenerationError, SharedMemoryExhaustedError,
                               UnsupportedDegreeError, VerificationFailedError, VulcanFemError)


@pytest.mark.parametrize("cls, code, exit_code", [
    (ConfigurationError, "CONFIGURATION_ERROR", 2),
    (DomainError, "DOMAIN_ERROR", 3),
    (UnsupportedDegreeError, "UNSUPPORTED_DEGREE", 3),
    (IncompressibleMaterialError, "INCOMPRESSIBLE_MATERIAL", 3),
    (InvertedElementError, "INVERTED_ELEMENT", 4),
    (MeshGenerationError, "MESH_GENERATION", 4),
    (CapacityError, "CAPACITY_EXCEEDED", 5),
    (SharedMemoryExhaustedError, "SHARED_MEMORY_EXHAUSTED", 5),
    (ContractViolationError, "CONTRACT_VIOLATION", 6),
    (VerificationFailedError, "VERIFICATION_FAILED", 7),
])
def test_codes_and_exit_status(cls, code, exit_code) -> None:
    """Every error has a stable code and exit status."""

    error = cls("boom")
    assert issubclass(cls, VulcanFemError)
    assert (error.code, error.exit_code) == (code, exit_code), \
        f"Expected {(code, exit_code)}, got {(error.code, error.exit_code)}"


def test_domain_errors_are_value_errors() -> None:
    """Domain errors can be caught as ValueError."""

    with pytest.raises(ValueError):
        raise IncompressibleMaterialError("nu = 0.5", nu=0.5)


def test_to_dict_is_json_ready() -> None:
    """The payload holds code, message and details and serializes through Encoder."""

    error = InvertedElementError("det J <= 0", element_id=7, xi=(1 / 3, 1 / 3, 0.0))
    payload = json.loads(json.dumps(error.to_dict(), cls=Encoder))
    assert payload["error"] == "INVERTED_ELEMENT"
    assert payload["message"] == "det J <= 0"
    assert payload["details"]["element_id"] == 7
    assert len(payload["details"]["xi"]) == 3
    assert str(error) == "det J <= 0"
