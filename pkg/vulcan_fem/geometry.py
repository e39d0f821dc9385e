"""
vulcan_fem/geometry.py

Multi-linear prism geometry: the reference-to-real mapping, Jacobian terms, physical derivatives
of shape functions, the Jacobian-terms buffer consumed by the precomputed-Jacobian kernels, test
mesh generation and JSON mesh exchange.

Vertex ordering: bottom triangle 0, 1, 2 counterclockwise seen from above, top triangle 3, 4, 5
stacked above 0, 1, 2. Vertex functions: N_v = lambda_v (1 - xi3)/2 for v < 3 and
lambda_{v-3} (1 + xi3)/2 otherwise, with lambda = (1 - xi1 - xi2, xi1, xi2).

Jacobian-terms record: 10 reals per (element, point), det first, then the inverse Jacobian
row-major (inv[k][i] = d xi_k / d x_i), element-major then point-major.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .buffers import read_json, write_json
from .decorator import log
from .errors import (ConfigurationError, DomainError, InvertedElementError,
                     MeshGenerationError)
from .printable import Printable
from .reference_element import (MAX_ORDER, MIN_ORDER, QuadratureRule,
                                RefCoords, ShapePointValues, _as_point,
                                prism_quadrature)

JACOBIAN_RECORD = 10
MESH_FORMAT = "vulcan-fem-prism-mesh"
MESH_VERSION = 1
MAX_DISTORTION = 0.3

REFERENCE_VERTICES = np.array([
    [0.0, 0.0, -1.0], [1.0, 0.0, -1.0], [0.0, 1.0, -1.0],
    [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0],
])


@dataclass(frozen=True, repr=False, eq=False)
class PrismGeometry(Printable):
    """
    A real prism given by its six vertices.

    Attributes:
        vertices (np.ndarray): [6][3] physical coordinates.
        element_id (Optional[int]): Identity reported by errors; None means "use the mesh index".
    """

    vertices: np.ndarray
    element_id: Optional[int] = None

    def __post_init__(self) -> None:
        if np.shape(self.vertices) != (6, 3):
            raise ConfigurationError(
                f"A prism needs [6][3] vertex coordinates, got {np.shape(self.vertices)}")

    def with_id(self, element_id: int) -> "PrismGeometry":
        return PrismGeometry(self.vertices, element_id)

    def scaled(self, factor: float) -> "PrismGeometry":
        return PrismGeometry(self.vertices * factor, self.element_id)

    def translated(self, offset: Sequence[float]) -> "PrismGeometry":
        return PrismGeometry(self.vertices + np.asarray(offset, dtype=np.float64), self.element_id)

    def transformed(self, matrix: np.ndarray, offset: Sequence[float] = (0.0, 0.0, 0.0)) -> "PrismGeometry":
        """Image under the affine map x -> matrix x + offset."""

        return PrismGeometry(self.vertices @ np.asarray(matrix, dtype=np.float64).T
                             + np.asarray(offset, dtype=np.float64), self.element_id)


@dataclass(frozen=True, repr=False, eq=False)
class JacobianTerms(Printable):
    """
    Attributes:
        det (float): Jacobian determinant, positive for valid elements.
        inv (np.ndarray): [3][3] inverse Jacobian, inv[k][i] = d xi_k / d x_i.
        jacobian (Optional[np.ndarray]): [3][3] J[i][j] = d x_i / d xi_j when computed.
    """

    det: float
    inv: np.ndarray
    jacobian: Optional[np.ndarray] = None

    def as_record(self) -> np.ndarray:
        """The 10-real buffer record: det, then inv row-major."""

        return np.concatenate([[self.det], np.asarray(self.inv).ravel()])


@dataclass(frozen=True, repr=False, eq=False)
class PhysicalShapeValues(Printable):
    """
    Attributes:
        values (np.ndarray): [4][N_sh]; row 0 values, rows 1..3 derivatives w.r.t. x1, x2, x3.
    """

    values: np.ndarray


def reference_prism(element_id: Optional[int] = None) -> PrismGeometry:
    """The reference prism itself (identity mapping)."""

    return PrismGeometry(REFERENCE_VERTICES.copy(), element_id)


def vertex_functions_batch(points: np.ndarray) -> np.ndarray:
    """[n][6] vertex function values at [n][3] reference points."""

    points = np.atleast_2d(points)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    lam = np.stack([1.0 - x - y, x, y], axis=1)
    lower, upper = (0.5 * (1.0 - z))[:, None], (0.5 * (1.0 + z))[:, None]
    return np.concatenate([lam * lower, lam * upper], axis=1)


def vertex_functions(xi: Union[RefCoords, Sequence[float]]) -> np.ndarray:
    """The six vertex function values at ``xi``."""

    return vertex_functions_batch(_as_point(xi)[None, :])[0]


def vertex_derivatives_batch(points: np.ndarray) -> np.ndarray:
    """[n][3][6] derivatives d N_v / d xi_j at [n][3] reference points."""

    points = np.atleast_2d(points)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    lower, upper = 0.5 * (1.0 - z), 0.5 * (1.0 + z)
    zero = np.zeros_like(x)
    d1 = np.stack([-lower, lower, zero, -upper, upper, zero], axis=1)
    d2 = np.stack([-lower, zero, lower, -upper, zero, upper], axis=1)
    lam = np.stack([1.0 - x - y, x, y], axis=1)
    d3 = np.concatenate([-0.5 * lam, 0.5 * lam], axis=1)
    return np.stack([d1, d2, d3], axis=1)


def geometry_shape_derivs(xi: Union[RefCoords, Sequence[float]]) -> np.ndarray:
    """
    Derivatives of the six vertex functions.

    Args:
        xi (RefCoords | Sequence[float]): Reference point.

    Returns:
        np.ndarray: [3][6], row j holds d N_v / d xi_j.
    """

    return vertex_derivatives_batch(_as_point(xi)[None, :])[0]


def cofactor_inverse(jacobian: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form 3x3 inverse through cofactors, evaluated in the dtype of ``jacobian``.

    The arithmetic is 27 flops for the cofactors, 5 for the determinant, 1 reciprocal and
    9 scalings.

    Args:
        jacobian (np.ndarray): [..., 3, 3] matrices.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Determinants [...] and inverses [..., 3, 3].
    """

    a, b, c = jacobian[..., 0, 0], jacobian[..., 0, 1], jacobian[..., 0, 2]
    d, e, f = jacobian[..., 1, 0], jacobian[..., 1, 1], jacobian[..., 1, 2]
    g, h, i = jacobian[..., 2, 0], jacobian[..., 2, 1], jacobian[..., 2, 2]
    c00, c01, c02 = e * i - f * h, f * g - d * i, d * h - e * g
    c10, c11, c12 = c * h - b * i, a * i - c * g, b * g - a * h
    c20, c21, c22 = b * f - c * e, c * d - a * f, a * e - b * d
    det = a * c00 + b * c01 + c * c02
    with np.errstate(divide="ignore", invalid="ignore"):
        rdet = np.reciprocal(det)
    inv = np.stack([
        np.stack([c00 * rdet, c10 * rdet, c20 * rdet], axis=-1),
        np.stack([c01 * rdet, c11 * rdet, c21 * rdet], axis=-1),
        np.stack([c02 * rdet, c12 * rdet, c22 * rdet], axis=-1),
    ], axis=-2)
    return det, inv


def _element_label(geom: PrismGeometry, index: Optional[int]) -> Optional[int]:
    return geom.element_id if geom.element_id is not None else index


def jacobian_batch(
    geom: PrismGeometry,
    points: np.ndarray,
    index: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Jacobian matrices, determinants and inverses at many reference points.

    Args:
        geom (PrismGeometry): The element.
        points (np.ndarray): [n][3] reference points.
        index (Optional[int]): Mesh index reported when the element has no id.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: J [n][3][3], det [n], inv [n][3][3].

    Raises:
        InvertedElementError: At the first point with det <= 0.
    """

    derivs = vertex_derivatives_batch(points)
    jacobian = np.einsum("vi,njv->nij", np.asarray(geom.vertices, dtype=np.float64), derivs)
    det, inv = cofactor_inverse(jacobian)
    bad = np.flatnonzero(~(det > 0.0))
    if bad.size:
        element_id = _element_label(geom, index)
        xi = np.atleast_2d(points)[bad[0]]
        raise InvertedElementError(
            f"Element {element_id} is inverted: det = {det[bad[0]]:.6g} at xi = {xi.tolist()}",
            element_id=element_id, xi=xi.tolist(), det=float(det[bad[0]]))
    return jacobian, det, inv


def jacobian_terms(geom: PrismGeometry, xi: Union[RefCoords, Sequence[float]]) -> JacobianTerms:
    """
    Jacobian determinant and inverse at one point.

    Raises:
        InvertedElementError: When det <= 0, with the element identity and ``xi``.
    """

    jacobian, det, inv = jacobian_batch(geom, _as_point(xi)[None, :])
    return JacobianTerms(float(det[0]), inv[0], jacobian[0])


def physical_derivatives_batch(table: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """
    Chain rule over many points.

    Args:
        table (np.ndarray): [n][4][N_sh] reference values.
        inv (np.ndarray): [n][3][3] inverse Jacobians.

    Returns:
        np.ndarray: [n][4][N_sh] with physical derivatives in rows 1..3.
    """

    physical = np.empty_like(table)
    physical[:, 0] = table[:, 0]
    physical[:, 1:] = np.einsum("nki,nks->nis", inv, table[:, 1:])
    return physical


def physical_derivatives(ref_vals: ShapePointValues, jt: JacobianTerms) -> PhysicalShapeValues:
    """
    psi_i = sum_k (d phi / d xi_k) inv[k][i]; the value row is copied unchanged.

    Raises:
        DomainError: When ``jt.det`` is not positive.
    """

    if not jt.det > 0.0:
        raise DomainError(f"Physical derivatives need det > 0, got {jt.det}", det=jt.det)
    values = physical_derivatives_batch(ref_vals.values[None], np.asarray(jt.inv)[None])[0]
    return PhysicalShapeValues(values)


def map_to_physical(geom: PrismGeometry, points: np.ndarray) -> np.ndarray:
    """[n][3] physical images of [n][3] reference points."""

    return vertex_functions_batch(points) @ np.asarray(geom.vertices, dtype=np.float64)


@log
def precompute_all_jacobian_terms(geoms: Sequence[PrismGeometry], rule: QuadratureRule) -> np.ndarray:
    """
    Builds the Jacobian-terms buffer for the precomputed-Jacobian kernels.

    Args:
        geoms (Sequence[PrismGeometry]): Elements in mesh order.
        rule (QuadratureRule): Rule of the kernel's order.

    Returns:
        np.ndarray: [n_elements][N_Q][10] wide-precision records.

    Raises:
        InvertedElementError: Naming the first inverted element.
    """

    buffer = np.empty((len(geoms), rule.n_points, JACOBIAN_RECORD))
    for index, geom in enumerate(geoms):
        _, det, inv = jacobian_batch(geom, rule.points, index)
        buffer[index, :, 0] = det
        buffer[index, :, 1:] = inv.reshape(rule.n_points, 9)
    return buffer


@lru_cache(maxsize=None)
def _all_rule_points() -> np.ndarray:
    points = [prism_quadrature(p).points for p in range(MIN_ORDER, MAX_ORDER + 1)]
    return np.vstack([REFERENCE_VERTICES, *points])


def check_element(geom: PrismGeometry, index: Optional[int] = None) -> None:
    """
    Checks det > 0 at the vertices and every point of every supported rule.

    Raises:
        InvertedElementError: When the check fails.
    """

    jacobian_batch(geom, _all_rule_points(), index)


def element_volume(geom: PrismGeometry, rule: QuadratureRule) -> float:
    """Sum of w * det over the points of ``rule``."""

    _, det, _ = jacobian_batch(geom, rule.points)
    return float(np.dot(rule.weights, det))


def _check_dimension(name: str, value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise DomainError(f"Mesh dimension {name} must be an integer >= 1, got {value!r}",
                          **{name: value})
    return int(value)


@log
def generate_box_mesh(
    nx: int,
    ny: int,
    nz: int,
    distortion: float = 0.0,
    seed: int = 42
) -> List[PrismGeometry]:
    """
    Splits the unit box into nx*ny*nz hexahedral cells and each cell into two prisms.

    Args:
        nx, ny, nz (int): Cells per axis.
        distortion (float): Interior vertex perturbation as a fraction of the cell size,
            in [0, 0.3). Zero gives right prisms (affine maps).
        seed (int): Seed of the perturbation generator.

    Returns:
        List[PrismGeometry]: 2*nx*ny*nz elements, ids equal to their mesh index.

    Raises:
        DomainError: For invalid dimensions or distortion.
        MeshGenerationError: When a perturbed element is inverted.
    """

    nx, ny, nz = (_check_dimension("nx", nx), _check_dimension("ny", ny),
                  _check_dimension("nz", nz))
    if not 0.0 <= distortion < MAX_DISTORTION:
        raise DomainError(f"Distortion must lie in [0, {MAX_DISTORTION}), got {distortion}",
                          distortion=distortion)
    axes = [np.linspace(0.0, 1.0, n + 1) for n in (nx, ny, nz)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    if distortion > 0.0:
        spacing = np.array([1.0 / nx, 1.0 / ny, 1.0 / nz])
        shift = np.random.default_rng(seed).uniform(-distortion, distortion, grid.shape) * spacing
        grid[1:-1, 1:-1, 1:-1] += shift[1:-1, 1:-1, 1:-1]

    lower_prisms = (((0, 0), (1, 0), (0, 1)), ((1, 0), (1, 1), (0, 1)))
    elements: List[PrismGeometry] = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                for triangle in lower_prisms:
                    vertices = [grid[i + di, j + dj, k + dk]
                                for dk in (0, 1) for di, dj in triangle]
                    elements.append(PrismGeometry(np.array(vertices), len(elements)))
    for geom in elements:
        try:
            check_element(geom)
        except InvertedElementError as e:
            raise MeshGenerationError(
                f"Failed to generate mesh: distortion {distortion} inverted element "
                f"{geom.element_id}", element_id=geom.element_id, seed=seed) from e
    return elements


def mesh_to_dict(geoms: Iterable[PrismGeometry]) -> dict:
    """
    Mesh exchange document with shared vertices deduplicated.

    Returns:
        dict: ``{"format", "version", "vertices": [[x, y, z], ...], "elements": [[v0..v5], ...]}``
    """

    geoms = list(geoms)
    if not geoms:
        return {"format": MESH_FORMAT, "version": MESH_VERSION, "vertices": [], "elements": []}
    stacked = np.concatenate([np.asarray(geom.vertices, dtype=np.float64) for geom in geoms])
    vertices, inverse = np.unique(stacked, axis=0, return_inverse=True)
    return {
        "format": MESH_FORMAT,
        "version": MESH_VERSION,
        "vertices": vertices.tolist(),
        "elements": inverse.reshape(-1).reshape(len(geoms), 6).tolist(),
    }


def mesh_from_dict(document: dict) -> List[PrismGeometry]:
    """
    Rebuilds elements from a mesh exchange document.

    Raises:
        ConfigurationError: For a malformed document.
    """

    if document.get("format") != MESH_FORMAT:
        raise ConfigurationError(f"Unknown mesh format {document.get('format')!r}")
    try:
        vertices = np.asarray(document["vertices"], dtype=np.float64).reshape(-1, 3)
        connectivity = np.asarray(document["elements"], dtype=np.int64).reshape(-1, 6)
        return [PrismGeometry(vertices[row], index) for index, row in enumerate(connectivity)]
    except (KeyError, ValueError, IndexError) as e:
        raise ConfigurationError(f"Failed to read mesh document: {e}") from e


def save_mesh(path: str, geoms: Iterable[PrismGeometry]) -> None:
    """Writes the mesh exchange JSON document."""

    write_json(path, mesh_to_dict(geoms))


def load_mesh(path: str) -> List[PrismGeometry]:
    """Reads a mesh written by :func:`save_mesh`."""

    return mesh_from_dict(read_json(path))
