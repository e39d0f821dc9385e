# tests/test_reference_element.py
from math import factorial

import numpy as np
import pytest

from vulcan_fem.errors import ConfigurationError, DomainError, UnsupportedDegreeError
from vulcan_fem.reference_element import (QuadratureRule, RefCoords, ShapeTable, basis_index,
                                          check_order, gauss_legendre_1d, l2_project,
                                          n_quadrature_points, n_shape_functions,
                                          prism_quadrature, shape_values, table_sizes,
                                          tabulate_shapes, triangle_monomials, triangle_rule)

SIZES = {
    1: (6, 6, 24, 24, 144, 36),
    2: (18, 18, 72, 72, 1296, 324),
    3: (40, 48, 192, 160, 7680, 1600),
    4: (75, 80, 320, 300, 24000, 5625),
    5: (126, 150, 600, 504, 75600, 15876),
    6: (196, 231, 924, 784, 181104, 38416),
    7: (288, 336, 1344, 1152, 387072, 82944),
}


@pytest.mark.parametrize("p", sorted(SIZES))
def test_table_sizes(p: int) -> None:
    """Shape-function counts, point counts and table sizes for every order."""

    n_sh, n_q, quad, per_point, total, blocks = SIZES[p]
    sizes = table_sizes(p)
    result = (n_shape_functions(p), n_quadrature_points(p), sizes["quadrature_entries"],
              sizes["shape_values_per_point"], sizes["shape_values_total"],
              sizes["stiffness_blocks"])
    assert result == SIZES[p], f"Expected {SIZES[p]}, got {result}"


@pytest.mark.parametrize("p", [0, 8, 2.0, True, "3"])
def test_check_order_rejects(p) -> None:
    """Orders outside [1, 7] or of the wrong type are domain errors."""

    with pytest.raises(DomainError):
        check_order(p)


def test_unsupported_triangle_degree() -> None:
    """Only even degrees 2..14 are tabulated."""

    with pytest.raises(UnsupportedDegreeError) as info:
        triangle_rule(16)
    assert info.value.details["degree"] == 16


@pytest.mark.parametrize("p", [1, 3, 5, 7])
def test_quadrature_weights_and_points(p: int) -> None:
    """Weights are positive, sum to the prism volume and points lie inside the prism."""

    rule = prism_quadrature(p)
    assert len(rule) == n_quadrature_points(p)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-13)
    for i in range(len(rule)):
        rule.coords(i).validate(tol=1e-12)


@pytest.mark.parametrize("p", [1, 2, 4, 6])
def test_quadrature_monomial_exactness(p: int) -> None:
    """Monomials up to triangle degree 2p and vertical degree 2p + 1 integrate exactly."""

    rule = prism_quadrature(p)
    x, y, z = rule.points.T
    for a in range(2 * p + 1):
        for b in range(2 * p + 1 - a):
            for c in (0, 2 * p, 2 * p + 1):
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                exact *= 2.0 / (c + 1) if c % 2 == 0 else 0.0
                result = float(np.sum(rule.weights * x ** a * y ** b * z ** c))
                assert result == pytest.approx(exact, abs=1e-12), \
                    f"Expected {exact}, got {result} for ({a}, {b}, {c})"


def test_ref_coords_validate() -> None:
    """Points outside the prism are rejected."""

    RefCoords(0.5, 0.5, -1.0).validate()
    with pytest.raises(DomainError):
        RefCoords(0.6, 0.5, 0.0).validate()


@pytest.mark.parametrize("p, a, b, k, expected", [
    (1, 0, 0, 0, 0),
    (2, 1, 0, 0, 6),
    (2, 0, 1, 2, 5),
    (3, 0, 3, 3, 27),
])
def test_basis_index(p, a, b, k, expected) -> None:
    """Triangle monomial major, Legendre index minor."""

    result = basis_index(p, a, b, k)
    assert result == expected, f"Expected {expected}, got {result}"


def test_basis_index_outside_basis() -> None:
    with pytest.raises(DomainError):
        basis_index(2, 2, 1, 0)


def test_shape_values_and_derivatives() -> None:
    """xi1 * P_1(xi3) and the constant mode at one point."""

    xi = RefCoords(0.2, 0.3, 0.5)
    values = shape_values(1, xi).values
    j = basis_index(1, 1, 0, 1)
    np.testing.assert_allclose(values[:, j], [0.1, 0.5, 0.0, 0.2], atol=1e-15)
    np.testing.assert_allclose(values[:, 0], [1.0, 0.0, 0.0, 0.0], atol=1e-15)


def test_tabulate_shapes_layout() -> None:
    """The table is [N_Q][4][N_sh] and matches point evaluation."""

    rule = prism_quadrature(2)
    table = tabulate_shapes(2, rule)
    assert table.data.shape == (18, 4, 18)
    assert table.n_entries == 1296
    np.testing.assert_allclose(table[5].values, shape_values(2, rule.coords(5)).values,
                               atol=1e-14)


def test_tabulate_shapes_order_mismatch() -> None:
    with pytest.raises(ConfigurationError):
        tabulate_shapes(3, prism_quadrature(2))


def test_binary_layouts() -> None:
    """Rules and tables survive their float32 buffers up to rounding."""

    rule = prism_quadrature(3)
    data = rule.to_bytes()
    assert len(data) == 192 * 4
    decoded = QuadratureRule.from_bytes(3, data)
    np.testing.assert_allclose(decoded.weights, rule.weights, rtol=1e-6)

    table = tabulate_shapes(3, rule)
    decoded_table = ShapeTable.from_bytes(3, table.to_bytes())
    np.testing.assert_allclose(decoded_table.data, table.data, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("p", [1, 3])
def test_l2_project_constant(p: int) -> None:
    """A constant field projects onto the constant mode only."""

    rule = prism_quadrature(p)
    coefficients = l2_project(p, rule, np.full(len(rule), 2.5))
    expected = np.zeros(n_shape_functions(p))
    expected[0] = 2.5
    np.testing.assert_allclose(coefficients, expected, atol=1e-9)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_basis_index_enumerates_basis(p: int) -> None:
    """Every index in [0, N_sh) is hit exactly once, in monomial then Legendre order."""

    seen = [basis_index(p, a, b, k) for a, b in triangle_monomials(p) for k in range(p + 1)]
    assert seen == list(range(n_shape_functions(p))), f"Expected 0..{n_shape_functions(p) - 1}, got {seen}"


@pytest.mark.parametrize("p", [1, 3, 5])
def test_shape_derivatives_match_finite_differences(p: int) -> None:
    """Reference derivatives agree with central differences of the values."""

    point = np.array([0.21, 0.33, -0.4])
    step = 1e-6
    table = shape_values(p, point).values
    for direction in range(3):
        offset = np.zeros(3)
        offset[direction] = step
        ahead = shape_values(p, point + offset).values[0]
        behind = shape_values(p, point - offset).values[0]
        np.testing.assert_allclose(table[direction + 1], (ahead - behind) / (2 * step),
                                   rtol=1e-6, atol=1e-7)


def test_gauss_legendre_exact_degree() -> None:
    """Eight points integrate x^14 exactly and x^16 does not."""

    points, weights = gauss_legendre_1d(8)
    assert float(np.sum(weights * points ** 14)) == pytest.approx(2.0 / 15.0, abs=1e-14)
    assert abs(float(np.sum(weights * points ** 16)) - 2.0 / 17.0) > 1e-8


def test_gauss_legendre_rejects_empty_rule() -> None:
    with pytest.raises(DomainError):
        gauss_legendre_1d(0)
