"""
vulcan_fem/integrate_ref.py

Sequential, wide-precision element integration: the brute-force generic integrator that
contracts the full coefficient array, and the elasticity-specialized integrator that updates one
3x3 block per shape-function pair. Both produce ElementStiffness in the canonical layout, row
index i_DOF * N_E + i_E.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .buffers import decode_f32, encode_f32, read_json, write_f32, write_json
from .coefficients import (MaterialData, MaterialField, PreviousSolution,
                           QuadCoefficients, coefficients_at_point,
                           elasticity_tensor)
from .decorator import log
from .errors import ConfigurationError
from .flops import (BLOCK_UPDATE_FLOPS, COEFFICIENT_FLOPS, JACOBIAN_FLOPS, SCALING_FLOPS,
                    SHAPE_DERIVATIVE_FLOPS, FlopCounter)
from .geometry import PrismGeometry, jacobian_batch, physical_derivatives_batch
from .logger import get_logger
from .printable import Printable
from .reference_element import (QuadratureRule, ShapeTable, n_quadrature_points,
                                n_shape_functions, prism_quadrature,
                                tabulate_shapes)

STIFFNESS_FORMAT = "vulcan-fem-stiffness"
METHODS = ("optimized", "generic")

logger = get_logger(__name__)


@dataclass(frozen=True, repr=False, eq=False)
class ElementStiffness(Printable):
    """
    Dense element stiffness matrix.

    Attributes:
        order_p (int): Approximation order.
        n_eq (int): Equations per node (3 for elasticity).
        data (np.ndarray): [(N_E N_sh)][(N_E N_sh)], row i_DOF * N_E + i_E.
        element_id (Optional[int]): Element the matrix belongs to.
    """

    order_p: int
    n_eq: int
    data: np.ndarray
    element_id: Optional[int] = None

    def __post_init__(self) -> None:
        size = self.n_eq * n_shape_functions(self.order_p)
        if np.shape(self.data) != (size, size):
            raise ConfigurationError(
                f"Stiffness of order {self.order_p} with {self.n_eq} equations needs "
                f"[{size}][{size}], got {np.shape(self.data)}")

    @property
    def n_shape(self) -> int:
        return n_shape_functions(self.order_p)

    @property
    def n_blocks(self) -> int:
        return self.n_shape ** 2

    def blocks(self) -> np.ndarray:
        """View [i_DOF][i_E][j_DOF][j_E]."""

        return self.data.reshape(self.n_shape, self.n_eq, self.n_shape, self.n_eq)

    def block(self, i_dof: int, j_dof: int) -> np.ndarray:
        return self.blocks()[i_dof, :, j_dof, :]

    def relative_error(self, reference: "ElementStiffness") -> float:
        """||self - reference||_F / ||reference||_F, computed in wide precision."""

        ref = np.asarray(reference.data, dtype=np.float64)
        diff = np.asarray(self.data, dtype=np.float64) - ref
        return float(np.linalg.norm(diff) / np.linalg.norm(ref))

    def symmetry_error(self) -> float:
        data = np.asarray(self.data, dtype=np.float64)
        return float(np.linalg.norm(data - data.T) / np.linalg.norm(data))

    def header(self) -> dict:
        size = self.data.shape[0]
        return {"format": STIFFNESS_FORMAT, "order_p": self.order_p, "n_eq": self.n_eq,
                "element_id": self.element_id, "shape": [size, size], "dtype": "float32-le"}

    def to_bytes(self) -> bytes:
        return encode_f32(self.data)

    @classmethod
    def from_bytes(cls, header: dict, data: bytes) -> "ElementStiffness":
        if header.get("format") != STIFFNESS_FORMAT:
            raise ConfigurationError(f"Unknown stiffness format {header.get('format')!r}")
        matrix = decode_f32(data, header["shape"]).astype(np.float64)
        return cls(header["order_p"], header["n_eq"], matrix, header.get("element_id"))

    def save(self, prefix: str) -> None:
        """Writes ``prefix.bin`` (flat float32) and ``prefix.json`` (header)."""

        write_json(f"{prefix}.json", self.header())
        write_f32(f"{prefix}.bin", self.data)

    @classmethod
    def load(cls, prefix: str) -> "ElementStiffness":
        header = read_json(f"{prefix}.json")
        try:
            with open(f"{prefix}.bin", "rb") as f:
                data = f.read()
        except OSError as e:
            raise ConfigurationError(f"Failed to read stiffness {prefix}.bin: {e}") from e
        return cls.from_bytes(header, data)


def _check_inputs(shapes: ShapeTable, rule: QuadratureRule) -> None:
    if shapes.order_p != rule.order_p or shapes.n_points != rule.n_points:
        raise ConfigurationError(
            f"Shape table (p={shapes.order_p}, {shapes.n_points} points) does not match "
            f"quadrature rule (p={rule.order_p}, {rule.n_points} points)")


def to_canonical(blocks: np.ndarray) -> np.ndarray:
    """[..., N_sh, N_sh, N_E, N_E] block array (r, s, i, k) -> [..., N_E N_sh, N_E N_sh]."""

    *lead, n_shape, _, n_eq, _ = blocks.shape
    moved = np.swapaxes(blocks, -3, -2)
    return moved.reshape(*lead, n_shape * n_eq, n_shape * n_eq)


def elasticity_block_terms(
    grad_r: np.ndarray,
    grad_s: np.ndarray,
    lam_s: np.ndarray,
    mu_s: np.ndarray
) -> np.ndarray:
    """
    Elasticity contribution of one point to the 3x3 block of a shape-function pair.

    term[i][k] = lam_s a_i b_k + mu_s a_k b_i + mu_s (a . b) d_ik, with a = grad_r, b = grad_s.
    Every operation stays in the dtype of the inputs; the dot product is summed left to right.

    Args:
        grad_r (np.ndarray): [..., 3] physical gradients of the test function.
        grad_s (np.ndarray): [..., 3] physical gradients of the trial function.
        lam_s (np.ndarray): lambda * det * w, broadcastable to the leading shape.
        mu_s (np.ndarray): mu * det * w, broadcastable to the leading shape.

    Returns:
        np.ndarray: [..., 3, 3] block terms.
    """

    lam_s = np.asarray(lam_s)[..., None]
    mu_s = np.asarray(mu_s)[..., None]
    dot = grad_r[..., 0] * grad_s[..., 0] + grad_r[..., 1] * grad_s[..., 1]
    dot = dot + grad_r[..., 2] * grad_s[..., 2]
    diag = mu_s[..., 0] * dot
    term = ((lam_s * grad_r)[..., :, None] * grad_s[..., None, :]
            + (mu_s * grad_r)[..., None, :] * grad_s[..., :, None])
    for i in range(3):
        term[..., i, i] += diag
    return term


def integrate_generic(
    geom: PrismGeometry,
    coeffs: QuadCoefficients,
    shapes: ShapeTable,
    rule: QuadratureRule,
    old: Optional[PreviousSolution] = None,
    index: Optional[int] = None
) -> ElementStiffness:
    """
    Brute-force integration over every (i_E, j_E, i_D, j_D, i_DOF, j_DOF) combination.

    A[i_E][j_E][r][s] = sum_Q det w c^Q[i_E][j_E][i_D][j_D] psi[i_D][r] psi[j_D][s], with no use of
    coefficient sparsity. Runs in wide precision and serves as the reference for every other path.

    Args:
        geom (PrismGeometry): Element.
        coeffs (QuadCoefficients): Coefficients at each point of ``rule``.
        shapes (ShapeTable): Basis tabulated on ``rule``.
        rule (QuadratureRule): Quadrature.
        old (Optional[PreviousSolution]): Passed to the coefficient hook.
        index (Optional[int]): Mesh index for error reports.

    Returns:
        ElementStiffness: Matrix with N_E = coeffs.n_eq.

    Raises:
        InvertedElementError: When det <= 0 at a quadrature point.
        ConfigurationError: For inconsistent inputs.
    """

    _check_inputs(shapes, rule)
    if coeffs.n_points != rule.n_points:
        raise ConfigurationError(
            f"{coeffs.n_points} coefficient tensors for {rule.n_points} quadrature points")
    if old is not None:
        old.check(coeffs.n_eq, shapes.n_shape)
    _, det, inv = jacobian_batch(geom, rule.points, index)
    psi = physical_derivatives_batch(np.asarray(shapes.data, dtype=np.float64), inv)
    tensors = np.stack([coefficients_at_point(coeffs[q], old, rule.coords(q)).entries
                        for q in range(rule.n_points)])
    dw = det * rule.weights
    weighted = np.einsum("q,qefab,qar->qefbr", dw, tensors, psi, optimize=True)
    full = np.einsum("qefbr,qbs->rsef", weighted, psi, optimize=True)
    return ElementStiffness(shapes.order_p, coeffs.n_eq, to_canonical(full),
                            geom.element_id if geom.element_id is not None else index)


def integrate_generic_loops(
    geom: PrismGeometry,
    coeffs: QuadCoefficients,
    shapes: ShapeTable,
    rule: QuadratureRule,
    old: Optional[PreviousSolution] = None,
    index: Optional[int] = None
) -> ElementStiffness:
    """
    :func:`integrate_generic` written as the explicit nest over points, equation pairs,
    derivative pairs and shape-function pairs. Pure Python, so only practical for p <= 2.
    """

    _check_inputs(shapes, rule)
    if coeffs.n_points != rule.n_points:
        raise ConfigurationError(
            f"{coeffs.n_points} coefficient tensors for {rule.n_points} quadrature points")
    if old is not None:
        old.check(coeffs.n_eq, shapes.n_shape)
    _, det, inv = jacobian_batch(geom, rule.points, index)
    psi = physical_derivatives_batch(np.asarray(shapes.data, dtype=np.float64), inv)
    n_eq, n_shape = coeffs.n_eq, shapes.n_shape
    n_slots = psi.shape[1]
    blocks = np.zeros((n_shape, n_shape, n_eq, n_eq))
    for i_q in range(rule.n_points):
        tensor = coefficients_at_point(coeffs[i_q], old, rule.coords(i_q)).entries
        dw = det[i_q] * rule.weights[i_q]
        for i_e in range(n_eq):
            for j_e in range(n_eq):
                for i_d in range(n_slots):
                    for j_d in range(n_slots):
                        c = dw * tensor[i_e, j_e, i_d, j_d]
                        for i_dof in range(n_shape):
                            for j_dof in range(n_shape):
                                blocks[i_dof, j_dof, i_e, j_e] += (
                                    c * psi[i_q, i_d, i_dof] * psi[i_q, j_d, j_dof])
    return ElementStiffness(shapes.order_p, n_eq, to_canonical(blocks),
                            geom.element_id if geom.element_id is not None else index)


def integrate_optimized(
    geom: PrismGeometry,
    mat: MaterialData,
    shapes: ShapeTable,
    rule: QuadratureRule,
    counter: Optional[FlopCounter] = None,
    index: Optional[int] = None
) -> ElementStiffness:
    """
    Elasticity integration one point at a time, with the 63-flop block update for every
    (i_DOF, j_DOF) pair.

    Args:
        geom (PrismGeometry): Element.
        mat (MaterialData): Material of the element.
        shapes (ShapeTable): Basis tabulated on ``rule``.
        rule (QuadratureRule): Quadrature.
        counter (Optional[FlopCounter]): Receives the operation counts when given.
        index (Optional[int]): Mesh index for error reports.

    Returns:
        ElementStiffness: 3-equation matrix in the canonical layout.
    """

    _check_inputs(shapes, rule)
    _, det, inv = jacobian_batch(geom, rule.points, index)
    grads = np.swapaxes(
        physical_derivatives_batch(np.asarray(shapes.data, dtype=np.float64), inv)[:, 1:, :], 1, 2)
    dw = det * rule.weights
    lam_s, mu_s = mat.lame_lambda * dw, mat.lame_mu * dw
    n_shape = shapes.n_shape
    counter = counter if counter is not None else FlopCounter()
    counter.add("coefficients", COEFFICIENT_FLOPS)
    counter.add("jacobian", JACOBIAN_FLOPS * det.size)
    counter.add("shape_derivatives", SHAPE_DERIVATIVE_FLOPS * (grads.size // 3))
    counter.add("scaling", SCALING_FLOPS * dw.size)
    acc = np.zeros((n_shape, n_shape, 3, 3))
    for q in range(rule.n_points):
        terms = elasticity_block_terms(grads[q][:, None, :], grads[q][None, :, :], lam_s[q], mu_s[q])
        counter.add("block_update", BLOCK_UPDATE_FLOPS * (terms.size // 9))
        acc += terms
    return ElementStiffness(shapes.order_p, 3, to_canonical(acc),
                            geom.element_id if geom.element_id is not None else index)


def flop_count_reference(p: int) -> int:
    """Block-update operations of :func:`integrate_optimized`: N_sh^2 * N_Q * 63."""

    return n_shape_functions(p) ** 2 * n_quadrature_points(p) * BLOCK_UPDATE_FLOPS


@log(level="INFO")
def integrate_mesh(
    mesh: Sequence[PrismGeometry],
    materials: MaterialField,
    p: int,
    method: str = "optimized",
    workers: Optional[int] = None
) -> List[ElementStiffness]:
    """
    Integrates every element on a thread pool.

    Args:
        mesh (Sequence[PrismGeometry]): Elements.
        materials (MaterialField): One material per element.
        p (int): Approximation order.
        method (str): "optimized" or "generic".
        workers (Optional[int]): Pool width, defaults to os.cpu_count().

    Returns:
        List[ElementStiffness]: Matrices in mesh order; each is independent of the pool width.
    """

    if method not in METHODS:
        raise ConfigurationError(f"Unknown integration method {method!r}; expected {METHODS}")
    if len(materials) != len(mesh):
        raise ConfigurationError(
            f"{len(materials)} materials for {len(mesh)} elements",
            materials=len(materials), elements=len(mesh))
    rule = prism_quadrature(p)
    shapes = tabulate_shapes(p, rule)

    def integrate(index: int) -> ElementStiffness:
        if method == "generic":
            coeffs = QuadCoefficients.constant(elasticity_tensor(materials[index]), rule.n_points)
            return integrate_generic(mesh[index], coeffs, shapes, rule, index=index)
        return integrate_optimized(mesh[index], materials[index], shapes, rule, index=index)

    with ThreadPoolExecutor(max_workers=workers or os.cpu_count()) as pool:
        results = list(pool.map(integrate, range(len(mesh))))
    logger.info(f"Integrated {len(results)} elements of order {p} ({method})")
    return results
