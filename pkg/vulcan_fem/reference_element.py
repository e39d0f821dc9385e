"""
vulcan_fem/reference_element.py

Shape-function bases and quadrature rules for the reference prism
{xi1 >= 0, xi2 >= 0, xi1 + xi2 <= 1} x [-1, 1].

Basis ordering: index = tri_index * (p + 1) + vert_index. The triangle factors are the monomials
xi1^a xi2^b (a + b <= p) ordered by total degree, then by a ascending; the vertical factors are the
Legendre polynomials P_0..P_p(xi3). Index 0 is the constant mode.

Quadrature: tensor product of the symmetric triangle rule of degree 2p and the (p+1)-point
Gauss-Legendre rule, points ordered triangle-major. Weights sum to the prism volume 1.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre

from .buffers import decode_f32, encode_f32
from .decorator import log
from .errors import ConfigurationError, DomainError, UnsupportedDegreeError
from .printable import Printable
from .triangle_rules import DUNAVANT_ORBITS, expand_orbits

MIN_ORDER = 1
MAX_ORDER = 7
N_DERIVATIVE_ROWS = 4
TRIANGLE_POINT_COUNTS = {2: 3, 4: 6, 6: 12, 8: 16, 10: 25, 12: 33, 14: 42}


def check_order(p: int) -> int:
    """
    Validates an approximation order.

    Args:
        p (int): Order to check.

    Returns:
        int: ``p`` unchanged.

    Raises:
        DomainError: When ``p`` is not an integer in [1, 7].
    """

    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or not MIN_ORDER <= p <= MAX_ORDER:
        raise DomainError(f"Order p must be an integer in [{MIN_ORDER}, {MAX_ORDER}], got {p!r}",
                          p=p)
    return int(p)


def n_shape_functions(p: int) -> int:
    """N_sh = (p+1)^2 (p+2) / 2."""

    p = check_order(p)
    return (p + 1) ** 2 * (p + 2) // 2


def n_quadrature_points(p: int) -> int:
    """N_Q = (triangle points of degree 2p) * (p + 1)."""

    p = check_order(p)
    return TRIANGLE_POINT_COUNTS[2 * p] * (p + 1)


def table_sizes(p: int) -> dict:
    """
    Entry counts of the precomputed arrays for order ``p``.

    Returns:
        dict: ``shape_values_total`` (4 N_sh N_Q), ``shape_values_per_point`` (4 N_sh),
            ``quadrature_entries`` (4 N_Q, three coordinates and a weight per point) and
            ``stiffness_blocks`` (N_sh^2).
    """

    n_sh, n_q = n_shape_functions(p), n_quadrature_points(p)
    return {
        "shape_values_total": N_DERIVATIVE_ROWS * n_sh * n_q,
        "shape_values_per_point": N_DERIVATIVE_ROWS * n_sh,
        "quadrature_entries": 4 * n_q,
        "stiffness_blocks": n_sh * n_sh,
    }


@dataclass(frozen=True)
class RefCoords:
    """A point of the reference prism."""

    xi1: float
    xi2: float
    xi3: float

    def validate(self, tol: float = 1e-12) -> "RefCoords":
        """
        Raises:
            DomainError: When the point lies outside the prism by more than ``tol``.
        """

        if (self.xi1 < -tol or self.xi2 < -tol or self.xi1 + self.xi2 > 1.0 + tol
                or abs(self.xi3) > 1.0 + tol):
            raise DomainError(f"Point {self} lies outside the reference prism",
                              xi=self.as_array())
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2, self.xi3], dtype=np.float64)


def _as_point(xi: Union[RefCoords, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(xi, RefCoords):
        return xi.as_array()
    return np.asarray(xi, dtype=np.float64).reshape(3)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, repr=False, eq=False)
class QuadratureRule(Printable):
    """
    Quadrature points and weights on the reference prism.

    Attributes:
        order_p (int): Approximation order the rule was built for.
        points (np.ndarray): [N_Q][3] reference coordinates.
        weights (np.ndarray): [N_Q] positive weights.
    """

    order_p: int
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.points.shape != (len(self.weights), 3):
            raise ConfigurationError(
                f"Quadrature points {self.points.shape} do not match {len(self.weights)} weights")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def n_points(self) -> int:
        return len(self.weights)

    def coords(self, index: int) -> RefCoords:
        return RefCoords(*(float(value) for value in self.points[index]))

    def to_bytes(self) -> bytes:
        """Layout [i_Q][xi1, xi2, xi3, w], little-endian float32."""

        return encode_f32(np.column_stack([self.points, self.weights]))

    @classmethod
    def from_bytes(cls, order_p: int, data: bytes) -> "QuadratureRule":
        table = decode_f32(data, (n_quadrature_points(order_p), 4)).astype(np.float64)
        return cls(order_p, table[:, :3].copy(), table[:, 3].copy())


@dataclass(frozen=True, repr=False, eq=False)
class ShapePointValues(Printable):
    """
    Basis values at one point.

    Attributes:
        order_p (int): Approximation order.
        values (np.ndarray): [4][N_sh]; row 0 values, rows 1..3 derivatives w.r.t. xi1, xi2, xi3.
    """

    order_p: int
    values: np.ndarray


@dataclass(frozen=True, repr=False, eq=False)
class ShapeTable(Printable):
    """
    Basis values and reference derivatives at every quadrature point.

    Attributes:
        order_p (int): Approximation order.
        data (np.ndarray): [N_Q][4][N_sh], the shape-function index fastest.
    """

    order_p: int
    data: np.ndarray

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def n_shape(self) -> int:
        return self.data.shape[2]

    @property
    def n_entries(self) -> int:
        return int(self.data.size)

    @property
    def per_point(self) -> List[ShapePointValues]:
        return [ShapePointValues(self.order_p, self.data[i]) for i in range(self.n_points)]

    def __getitem__(self, index: int) -> ShapePointValues:
        return ShapePointValues(self.order_p, self.data[index])

    def to_bytes(self) -> bytes:
        """Layout [i_Q][i_D][i_DOF], little-endian float32."""

        return encode_f32(self.data)

    @classmethod
    def from_bytes(cls, order_p: int, data: bytes) -> "ShapeTable":
        shape = (n_quadrature_points(order_p), N_DERIVATIVE_ROWS, n_shape_functions(order_p))
        return cls(order_p, decode_f32(data, shape).astype(np.float64))


def gauss_legendre_1d(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule on [-1, 1], exact for polynomials of degree 2n - 1.

    Args:
        n (int): Number of points, at least 1.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Points and weights.
    """

    if n < 1:
        raise DomainError(f"Gauss-Legendre rule needs at least one point, got {n}", n=n)
    points, weights = legendre.leggauss(n)
    return points, weights


@lru_cache(maxsize=None)
def triangle_rule(poly_degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Symmetric triangle rule exact for total degree ``poly_degree``.

    Args:
        poly_degree (int): One of 2, 4, ..., 14.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Points [n][2] as (xi1, xi2) and weights [n] summing to 1/2.

    Raises:
        UnsupportedDegreeError: For any other degree.
    """

    if poly_degree not in DUNAVANT_ORBITS:
        raise UnsupportedDegreeError(
            f"No triangle rule of degree {poly_degree}; supported: {sorted(DUNAVANT_ORBITS)}",
            degree=poly_degree)
    barycentric, weights = expand_orbits(poly_degree)
    weights = 0.5 * weights / weights.sum()
    return _readonly(barycentric[:, 1:].copy()), _readonly(weights)


@lru_cache(maxsize=None)
def prism_quadrature(p: int) -> QuadratureRule:
    """
    Tensor-product rule for order ``p``: triangle degree 2p times (p+1)-point Gauss-Legendre.

    Raises:
        DomainError: When p is outside [1, 7].
    """

    p = check_order(p)
    tri_points, tri_weights = triangle_rule(2 * p)
    line_points, line_weights = gauss_legendre_1d(p + 1)
    n_tri, n_line = len(tri_weights), len(line_weights)
    points = np.column_stack([
        np.repeat(tri_points[:, 0], n_line),
        np.repeat(tri_points[:, 1], n_line),
        np.tile(line_points, n_tri),
    ])
    weights = np.outer(tri_weights, line_weights).ravel()
    return QuadratureRule(p, _readonly(points), _readonly(weights))


@lru_cache(maxsize=None)
def triangle_monomials(p: int) -> Tuple[Tuple[int, int], ...]:
    """Exponents (a, b) of the triangle factors in basis order."""

    p = check_order(p)
    return tuple((a, degree - a) for degree in range(p + 1) for a in range(degree + 1))


def basis_index(p: int, a: int, b: int, k: int) -> int:
    """
    Position of xi1^a xi2^b P_k(xi3) in the basis of order ``p``.

    Raises:
        DomainError: When the function is not part of the basis.
    """

    monomials = triangle_monomials(p)
    if (a, b) not in monomials or not 0 <= k <= p:
        raise DomainError(f"xi1^{a} xi2^{b} P_{k} is not in the order-{p} basis",
                          p=p, a=a, b=b, k=k)
    return monomials.index((a, b)) * (p + 1) + k


@lru_cache(maxsize=None)
def _legendre_derivative_matrix(p: int) -> np.ndarray:
    """Column k holds the Legendre coefficients of P_k'."""

    matrix = np.zeros((p + 1, p + 1))
    for k in range(p + 1):
        coefficients = legendre.legder(np.eye(p + 1)[k])
        matrix[:len(coefficients), k] = coefficients
    return matrix


def shape_values_batch(p: int, points: np.ndarray) -> np.ndarray:
    """
    Evaluates the basis and its reference derivatives at many points.

    Args:
        p (int): Approximation order.
        points (np.ndarray): [n][3] reference coordinates.

    Returns:
        np.ndarray: [n][4][N_sh] in wide precision.
    """

    p = check_order(p)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    monomials = triangle_monomials(p)
    tri = np.zeros((len(points), 3, len(monomials)))
    for j, (a, b) in enumerate(monomials):
        xa, yb = x ** a, y ** b
        tri[:, 0, j] = xa * yb
        if a > 0:
            tri[:, 1, j] = a * x ** (a - 1) * yb
        if b > 0:
            tri[:, 2, j] = b * xa * y ** (b - 1)
    vert = legendre.legvander(z, p)
    dvert = vert @ _legendre_derivative_matrix(p)
    n = len(points)
    table = np.empty((n, N_DERIVATIVE_ROWS, len(monomials) * (p + 1)))
    table[:, 0] = (tri[:, 0, :, None] * vert[:, None, :]).reshape(n, -1)
    table[:, 1] = (tri[:, 1, :, None] * vert[:, None, :]).reshape(n, -1)
    table[:, 2] = (tri[:, 2, :, None] * vert[:, None, :]).reshape(n, -1)
    table[:, 3] = (tri[:, 0, :, None] * dvert[:, None, :]).reshape(n, -1)
    return table


def shape_values(p: int, xi: Union[RefCoords, Sequence[float]]) -> ShapePointValues:
    """
    Basis values and reference derivatives at one point.

    Args:
        p (int): Approximation order in [1, 7].
        xi (RefCoords | Sequence[float]): Point of the reference prism.

    Returns:
        ShapePointValues: The [4][N_sh] table for ``xi``.
    """

    return ShapePointValues(check_order(p), shape_values_batch(p, _as_point(xi)[None, :])[0])


@log
def tabulate_shapes(p: int, rule: QuadratureRule) -> ShapeTable:
    """
    Tabulates the basis at every point of ``rule``.

    Raises:
        ConfigurationError: When ``rule`` was built for another order.
    """

    p = check_order(p)
    if rule.order_p != p:
        raise ConfigurationError(
            f"Quadrature rule of order {rule.order_p} cannot tabulate order-{p} shapes",
            rule_order=rule.order_p, p=p)
    return ShapeTable(p, _readonly(shape_values_batch(p, rule.points)))


def l2_project(p: int, rule: QuadratureRule, values: np.ndarray) -> np.ndarray:
    """
    Projects point values onto the basis.

    Args:
        p (int): Approximation order.
        rule (QuadratureRule): Rule the values were sampled on; must integrate degree-2p products.
        values (np.ndarray): [N_Q] or [N_Q][m] samples.

    Returns:
        np.ndarray: [N_sh] or [N_sh][m] basis coefficients.
    """

    phi = shape_values_batch(p, rule.points)[:, 0, :]
    weighted = phi * rule.weights[:, None]
    mass = weighted.T @ phi
    return np.linalg.solve(mass, weighted.T @ np.asarray(values, dtype=np.float64))
