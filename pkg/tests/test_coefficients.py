# tests/test_coefficients.py
import numpy as np
import pytest

from vulcan_fem.coefficients import (CoefficientTensor, MaterialData, MaterialField,
                                     PreviousSolution, QuadCoefficients, elasticity_tensor,
                                     scalar_tensor)
from vulcan_fem.errors import ConfigurationError, DomainError, IncompressibleMaterialError


@pytest.mark.parametrize("young, nu, mu, lam", [
    (2.5, 0.25, 1.0, 1.0),
    (1.0, 0.3, 1.0 / 2.6, 0.3 / (1.3 * 0.4)),
    (210e9, 0.0, 105e9, 0.0),
])
def test_lame_parameters(young, nu, mu, lam) -> None:
    mat = MaterialData(young, nu)
    assert mat.lame_mu == pytest.approx(mu)
    assert mat.lame_lambda == pytest.approx(lam)


def test_incompressible_material() -> None:
    """nu = 0.5 has its own error."""

    with pytest.raises(IncompressibleMaterialError) as info:
        MaterialData(1.0, 0.5)
    assert info.value.details == {"poisson_nu": 0.5}


@pytest.mark.parametrize("young, nu", [(0.0, 0.2), (-1.0, 0.2), (1.0, 0.6), (1.0, -1.0)])
def test_material_domain(young, nu) -> None:
    with pytest.raises(DomainError):
        MaterialData(young, nu)


def test_material_parse() -> None:
    assert MaterialData.parse("2.5,0.25") == MaterialData(2.5, 0.25)
    with pytest.raises(ConfigurationError):
        MaterialData.parse("2.5")


def test_elasticity_tensor_entries() -> None:
    """Only derivative slots are filled; entries follow the isotropic law."""

    entries = elasticity_tensor(MaterialData(2.5, 0.25)).entries
    assert entries.shape == (3, 3, 4, 4)
    assert np.all(entries[:, :, 0, :] == 0) and np.all(entries[:, :, :, 0] == 0)
    assert entries[0, 0, 1, 1] == pytest.approx(3.0)
    assert entries[0, 0, 2, 2] == pytest.approx(1.0)
    assert entries[0, 1, 1, 2] == pytest.approx(1.0)
    assert entries[0, 1, 2, 1] == pytest.approx(1.0)
    assert entries[0, 1, 1, 1] == 0.0
    # major symmetry c[i][k][j][l] = c[k][i][l][j]
    np.testing.assert_allclose(entries, np.transpose(entries, (1, 0, 3, 2)))


def test_scalar_tensor() -> None:
    tensor = scalar_tensor(2.0, 0.5)
    assert tensor.n_eq == 1
    assert tensor.entries[0, 0, 0, 0] == 0.5
    assert int(tensor.sparsity_mask.sum()) == 4


def test_tensor_shape_checked() -> None:
    with pytest.raises(ConfigurationError):
        CoefficientTensor(np.zeros((3, 2, 4, 4)))


def test_quad_coefficients_constant() -> None:
    tensor = elasticity_tensor(MaterialData(1.0, 0.3))
    coeffs = QuadCoefficients.constant(tensor, 18)
    assert (coeffs.n_points, coeffs.n_eq) == (18, 3)
    np.testing.assert_array_equal(coeffs[17].entries, tensor.entries)


def test_previous_solution_check() -> None:
    PreviousSolution(np.zeros((3, 18))).check(3, 18)
    with pytest.raises(ConfigurationError):
        PreviousSolution(np.zeros((3, 17))).check(3, 18)


def test_material_field() -> None:
    """Fields index, slice and flatten to the kernels' material buffer."""

    field = MaterialField.from_pairs([[1.0, 0.2], [2.0, 0.3], [3.0, 0.1]])
    assert len(field) == 3
    assert field[1] == MaterialData(2.0, 0.3)
    assert len(field.subset(1, 3)) == 2
    np.testing.assert_array_equal(field.as_buffer()[:, 0], [1.0, 2.0, 3.0])
    assert len(MaterialField.uniform(MaterialData(1.0, 0.3), 4)) == 4
    with pytest.raises(ConfigurationError):
        MaterialField.from_pairs([[1.0]])
    with pytest.raises(IncompressibleMaterialError):
        MaterialField.from_pairs([[1.0, 0.5]])
