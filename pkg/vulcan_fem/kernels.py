"""
vulcan_fem/kernels.py

Data-parallel emulation of the four integration kernels on the virtual device.

Each work-group owns a contiguous range of elements and processes them part by part: for every
part it derives (JAC) or reads (NOJAC) the Jacobian terms at all quadrature points, converts the
reference derivatives to physical ones, lets each thread update its blocks point by point and
finally writes the finished blocks to global memory. A thread's blocks are

    linear index = part * wg * bpt + thread * bpt + b,  i_DOF = index // N_sh,  j_DOF = index % N_sh

and indices at or beyond N_sh^2 are padding: computed but never written. Work-groups are
scheduled on a thread pool and write disjoint output ranges, so the result does not depend on
the pool width. Arithmetic is elementwise in the buffer precision and the point loop is
accumulated in order, which keeps single-precision results reproducible.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .buffers import write_f32, write_json
from .coefficients import MaterialField
from .decorator import log
from .errors import (ConfigurationError, ContractViolationError,
                     InvertedElementError, SharedMemoryExhaustedError)
from .flops import (BLOCK_UPDATE_FLOPS, COEFFICIENT_FLOPS, JACOBIAN_FLOPS, SCALING_FLOPS,
                    SHAPE_DERIVATIVE_FLOPS, FlopCounter, element_flops)
from .geometry import (PrismGeometry, cofactor_inverse,
                       precompute_all_jacobian_terms, vertex_derivatives_batch)
from .integrate_ref import ElementStiffness, elasticity_block_terms
from .logger import get_logger
from .planner import (FLOAT_BYTES, N_EQ, DeviceSpec, ExecutionPlan,
                      KernelVariant, Storage, clip_plan, memory_accounting,
                      plan_execution)
from .printable import Printable
from .reference_element import (QuadratureRule, ShapeTable, n_quadrature_points,
                                prism_quadrature, tabulate_shapes)

CHUNK_VALUES = 1 << 19

logger = get_logger(__name__)


class Precision(Enum):
    """Arithmetic precision of the kernel buffers."""

    SINGLE = "f32"
    WIDE = "f64"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32) if self is Precision.SINGLE else np.dtype(np.float64)

    @classmethod
    def parse(cls, text: str) -> "Precision":
        aliases = {"f32": cls.SINGLE, "single": cls.SINGLE, "f64": cls.WIDE, "wide": cls.WIDE,
                   "double": cls.WIDE}
        try:
            return aliases[text.strip().lower()]
        except KeyError as e:
            raise ConfigurationError(f"Unknown precision {text!r}; expected f32 or f64",
                                     precision=text) from e


@dataclass(frozen=True, repr=False, eq=False)
class KernelInputs(Printable):
    """
    Kernel arguments of one invocation.

    Attributes:
        variant (KernelVariant): Kernel the inputs were built for.
        plan (ExecutionPlan): Launch parameters.
        precision (Precision): Buffer precision.
        exec_params (np.ndarray): int32 [p, N_sh, N_Q, wg, bpt, n_parts, elems_per_wg, n_elements].
        shape_table_buffer (np.ndarray): [N_Q][4][N_sh].
        quadrature_buffer (np.ndarray): [N_Q][xi1, xi2, xi3, w].
        material_buffer (np.ndarray): [n][E, nu].
        geometry_buffer (Optional[np.ndarray]): [n][6][3] vertices, JAC variants.
        jacobian_terms_buffer (Optional[np.ndarray]): [n][N_Q][10] records, NOJAC variants.
        element_ids (Tuple[int, ...]): Element identities in buffer order.
    """

    variant: KernelVariant
    plan: ExecutionPlan
    precision: Precision
    exec_params: np.ndarray
    shape_table_buffer: np.ndarray
    quadrature_buffer: np.ndarray
    material_buffer: np.ndarray
    geometry_buffer: Optional[np.ndarray] = None
    jacobian_terms_buffer: Optional[np.ndarray] = None
    element_ids: Tuple[int, ...] = ()

    @property
    def n_elements(self) -> int:
        return len(self.material_buffer)

    def buffers(self) -> Dict[str, np.ndarray]:
        """Populated buffers by accounting item name."""

        named = {
            "exec_params": self.exec_params,
            "shape_table": self.shape_table_buffer,
            "quadrature": self.quadrature_buffer,
            "coefficients": self.material_buffer,
            "geometry": self.geometry_buffer,
            "jacobian_terms": self.jacobian_terms_buffer,
        }
        return {name: buffer for name, buffer in named.items() if buffer is not None}

    def device_bytes(self) -> Dict[str, int]:
        """Bytes each buffer occupies on the device (32-bit words)."""

        return {name: int(buffer.size) * FLOAT_BYTES for name, buffer in self.buffers().items()}

    @property
    def transfer_bytes(self) -> int:
        return sum(self.device_bytes().values())

    def validate(self) -> "KernelInputs":
        """
        Checks the buffers against the plan and the variant family.

        Raises:
            ContractViolationError: On any mismatch.
        """

        if self.variant.computes_jacobian != (self.geometry_buffer is not None):
            raise ContractViolationError(
                f"{self.variant.value} needs the geometry buffer exactly when computing Jacobians")
        if self.variant.computes_jacobian == (self.jacobian_terms_buffer is not None):
            raise ContractViolationError(
                f"{self.variant.value} needs the Jacobian-terms buffer exactly when reading them")
        if self.n_elements != self.plan.elems_per_kernel:
            raise ContractViolationError(
                f"Buffers hold {self.n_elements} elements, plan expects "
                f"{self.plan.elems_per_kernel}", elements=self.n_elements,
                elems_per_kernel=self.plan.elems_per_kernel)
        expected = memory_accounting(self.plan).items
        for name, n_bytes in self.device_bytes().items():
            if n_bytes != expected[name]:
                raise ContractViolationError(
                    f"Buffer {name} holds {n_bytes} B, memory accounting expects {expected[name]} B",
                    buffer=name, actual_bytes=n_bytes, expected_bytes=expected[name])
        return self


@dataclass(repr=False, eq=False)
class KernelOutput(Printable):
    """
    Results of one invocation.

    Attributes:
        stiffness_buffer (np.ndarray): [n][N_sh][3][N_sh][3]; reshaped to [n][3 N_sh][3 N_sh] it is
            the canonical layout.
        write_counts (np.ndarray): int32 [n][n_parts * wg * bpt], writes per linear block index;
            indices from N_sh^2 on are padding.
        flops (FlopCounter): Instrumented operation counts.
        barrier_trace (Optional[Dict[int, List[str]]]): Phase labels per work-group when traced.
    """

    stiffness_buffer: np.ndarray
    write_counts: np.ndarray
    flops: FlopCounter = field(default_factory=FlopCounter)
    barrier_trace: Optional[Dict[int, List[str]]] = None

    @classmethod
    def allocate(cls, plan: ExecutionPlan, precision: Precision) -> "KernelOutput":
        """Zero-initialized output for ``plan``."""

        n_shape = plan.n_shape
        stiffness = np.zeros((plan.elems_per_kernel, n_shape, N_EQ, n_shape, N_EQ),
                             dtype=precision.dtype)
        counts = np.zeros((plan.elems_per_kernel, plan.n_parts * plan.threads_per_part),
                          dtype=np.int32)
        return cls(stiffness, counts)

    @property
    def n_elements(self) -> int:
        return self.stiffness_buffer.shape[0]

    @property
    def matrices(self) -> np.ndarray:
        n = self.stiffness_buffer.shape[1] * N_EQ
        return self.stiffness_buffer.reshape(self.n_elements, n, n)

    @property
    def padding_writes(self) -> int:
        n_blocks = self.stiffness_buffer.shape[1] ** 2
        return int(self.write_counts[:, n_blocks:].sum())

    @property
    def exact_coverage(self) -> bool:
        """Every block written exactly once, no padding written."""

        n_blocks = self.stiffness_buffer.shape[1] ** 2
        return bool(np.all(self.write_counts[:, :n_blocks] == 1)) and self.padding_writes == 0

    @property
    def flops_by_phase(self) -> Dict[str, int]:
        return dict(self.flops.counts)

    @property
    def flops_per_element(self) -> float:
        return self.flops.total / max(1, self.n_elements)


class SharedScratch:
    """
    Capacity-checked shared memory of one work-group, sized in device (32-bit) words.
    """

    def __init__(self, capacity_bytes: int) -> None:
        self.capacity_bytes = capacity_bytes
        self.used_bytes = 0

    def reserve(self, name: str, n_bytes: int) -> None:
        if self.used_bytes + n_bytes > self.capacity_bytes:
            raise SharedMemoryExhaustedError(
                f"Shared memory exhausted allocating {name}: {self.used_bytes} + {n_bytes} B "
                f"exceeds {self.capacity_bytes} B", buffer=name, used_bytes=self.used_bytes,
                requested_bytes=n_bytes, capacity_bytes=self.capacity_bytes)
        self.used_bytes += n_bytes



def _exec_params(plan: ExecutionPlan, n_points: int) -> np.ndarray:
    return np.array([plan.order_p, plan.n_shape, n_points, plan.work_group_size,
                     plan.blocks_per_thread, plan.n_parts, plan.elems_per_work_group,
                     plan.elems_per_kernel], dtype=np.int32)


@log
def build_kernel_inputs(
    variant: KernelVariant,
    plan: ExecutionPlan,
    rule: QuadratureRule,
    shapes: ShapeTable,
    mesh: Sequence[PrismGeometry],
    materials: MaterialField,
    precision: Precision = Precision.SINGLE,
    first_index: int = 0
) -> KernelInputs:
    """
    Creates the kernel arguments for the elements of one invocation.

    Jacobian terms of NOJAC variants are computed on the host in wide precision and rounded to
    the buffer precision.

    Args:
        variant (KernelVariant): Kernel variant.
        plan (ExecutionPlan): Plan with elems_per_kernel == len(mesh).
        rule (QuadratureRule): Quadrature of the plan's order.
        shapes (ShapeTable): Basis tabulated on ``rule``.
        mesh (Sequence[PrismGeometry]): Elements of this invocation.
        materials (MaterialField): Their materials.
        precision (Precision): Buffer precision.
        first_index (int): Mesh index of the first element, used when an element has no id.

    Raises:
        ContractViolationError: When the element count or the orders disagree.
        InvertedElementError: From the host Jacobian computation of NOJAC variants.
    """

    if len(mesh) != plan.elems_per_kernel or len(materials) != len(mesh):
        raise ContractViolationError(
            f"Plan for {plan.elems_per_kernel} elements got {len(mesh)} elements and "
            f"{len(materials)} materials")
    if rule.order_p != plan.order_p or shapes.order_p != plan.order_p:
        raise ContractViolationError(
            f"Plan of order {plan.order_p} got rule of order {rule.order_p} and shapes of order "
            f"{shapes.order_p}")
    dtype = precision.dtype
    geometry, jacobian_terms = None, None
    if variant.computes_jacobian:
        geometry = np.stack([np.asarray(geom.vertices) for geom in mesh]).astype(dtype)
    else:
        jacobian_terms = precompute_all_jacobian_terms(list(mesh), rule).astype(dtype)
    ids = tuple(geom.element_id if geom.element_id is not None else first_index + index
                for index, geom in enumerate(mesh))
    return KernelInputs(
        variant=variant,
        plan=plan,
        precision=precision,
        exec_params=_exec_params(plan, rule.n_points),
        shape_table_buffer=np.asarray(shapes.data, dtype=dtype),
        quadrature_buffer=np.column_stack([rule.points, rule.weights]).astype(dtype),
        material_buffer=materials.as_buffer().astype(dtype),
        geometry_buffer=geometry,
        jacobian_terms_buffer=jacobian_terms,
        element_ids=ids,
    ).validate()


def transfer_inputs(inputs: KernelInputs) -> KernelInputs:
    """Copies every buffer, standing in for the host-to-device transfer."""

    def copy(buffer: Optional[np.ndarray]) -> Optional[np.ndarray]:
        return None if buffer is None else np.array(buffer, copy=True)

    return KernelInputs(
        variant=inputs.variant, plan=inputs.plan, precision=inputs.precision,
        exec_params=copy(inputs.exec_params), shape_table_buffer=copy(inputs.shape_table_buffer),
        quadrature_buffer=copy(inputs.quadrature_buffer),
        material_buffer=copy(inputs.material_buffer),
        geometry_buffer=copy(inputs.geometry_buffer),
        jacobian_terms_buffer=copy(inputs.jacobian_terms_buffer),
        element_ids=inputs.element_ids)


def _device_jacobians(
    inputs: KernelInputs,
    chunk: slice,
    vertex_derivs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """det [E][Q] and inv [E][Q][3][3] from the element vertices, in the buffer precision."""

    vertices = inputs.geometry_buffer[chunk]
    jacobian = np.zeros((vertices.shape[0], vertex_derivs.shape[0], 3, 3),
                        dtype=inputs.precision.dtype)
    for v in range(6):
        jacobian += vertices[:, None, v, :, None] * vertex_derivs[None, :, None, :, v]
    det, inv = cofactor_inverse(jacobian)
    bad = np.argwhere(~(det > 0))
    if bad.size:
        e, q = bad[0]
        element_id = inputs.element_ids[chunk.start + e] if inputs.element_ids else chunk.start + e
        xi = inputs.quadrature_buffer[q, :3].astype(np.float64).tolist()
        raise InvertedElementError(
            f"Element {element_id} is inverted: det = {float(det[e, q]):.6g} at xi = {xi}",
            element_id=element_id, xi=xi, det=float(det[e, q]))
    return det, inv


def _run_work_group(
    inputs: KernelInputs,
    output: KernelOutput,
    group: int,
    trace: bool
) -> Tuple[FlopCounter, List[str]]:
    plan, variant = inputs.plan, inputs.variant
    dtype = inputs.precision.dtype
    n_shape, n_blocks = plan.n_shape, plan.n_blocks
    threads = plan.threads_per_part
    shapes = inputs.shape_table_buffer
    n_points = shapes.shape[0]
    weights = inputs.quadrature_buffer[:, 3]
    counter, labels = FlopCounter(), []

    scratch = SharedScratch(plan.shared_mem_bytes)
    scratch.reserve("workspace", plan.shared_reserve_bytes)
    if variant.storage is Storage.SHARED:
        scratch.reserve("blocks", threads * N_EQ * N_EQ * FLOAT_BYTES)
    vertex_derivs = None
    if variant.computes_jacobian:
        vertex_derivs = vertex_derivatives_batch(inputs.quadrature_buffer[:, :3])

    elements = plan.work_group_elements(group)
    step = max(1, CHUNK_VALUES // (n_points * threads))
    for start in range(elements.start, elements.stop, step):
        chunk = slice(start, min(start + step, elements.stop))
        young, nu = inputs.material_buffer[chunk, 0], inputs.material_buffer[chunk, 1]
        one, two = dtype.type(1), dtype.type(2)
        opnu = one + nu
        mu = young / (two * opnu)
        lam = young * nu / (opnu * (one - two * nu))
        counter.add("coefficients", COEFFICIENT_FLOPS * len(young))
        n_chunk = len(young)

        for part in range(plan.n_parts):
            index = np.arange(part * threads, (part + 1) * threads)
            valid = index < n_blocks
            rows = np.where(valid, index // n_shape, 0)
            cols = np.where(valid, index % n_shape, 0)
            if trace:
                labels += ["load_inputs", "barrier"]

            if variant.computes_jacobian:
                det, inv = _device_jacobians(inputs, chunk, vertex_derivs)
            else:
                records = inputs.jacobian_terms_buffer[chunk]
                det, inv = records[..., 0], records[..., 1:].reshape(n_chunk, n_points, 3, 3)
            if trace:
                labels += ["jacobian", "barrier"]

            # psi[e][q][i][s] = sum_k dphi_k[q][s] inv[e][q][k][i]
            psi = inv[:, :, 0, :, None] * shapes[None, :, 1, None, :]
            psi = psi + inv[:, :, 1, :, None] * shapes[None, :, 2, None, :]
            psi = psi + inv[:, :, 2, :, None] * shapes[None, :, 3, None, :]
            grads = np.swapaxes(psi, 2, 3)
            dw = det * weights[None, :]
            lam_s, mu_s = lam[:, None] * dw, mu[:, None] * dw
            if trace:
                labels += ["shape_derivatives", "barrier"]

            terms = elasticity_block_terms(grads[:, :, rows, :], grads[:, :, cols, :],
                                           lam_s[..., None], mu_s[..., None])
            acc = np.zeros((n_chunk, threads, N_EQ, N_EQ), dtype=dtype)
            for q in range(n_points):
                acc += terms[:, q]
            if trace:
                labels += ["block_update", "barrier"]

            if variant.computes_jacobian:
                counter.add("jacobian", JACOBIAN_FLOPS * det.size)
            counter.add("shape_derivatives", SHAPE_DERIVATIVE_FLOPS * (grads.size // 3))
            counter.add("scaling", SCALING_FLOPS * dw.size)
            counter.add("block_update", BLOCK_UPDATE_FLOPS * (terms.size // (N_EQ * N_EQ)))

            output.stiffness_buffer[chunk, rows[valid], :, cols[valid], :] = np.swapaxes(
                acc[:, valid], 0, 1)
            output.write_counts[chunk, index[valid]] += 1
            if trace:
                labels += ["write", "barrier"]
    if trace:
        logger.debug(f"Work-group {group}: elements {elements.start}..{elements.stop - 1}, "
                     f"{counter.total} flops")
    return counter, labels


def run_kernel(
    variant: KernelVariant,
    inputs: KernelInputs,
    output: Optional[KernelOutput] = None,
    workers: Optional[int] = None,
    trace: bool = False
) -> KernelOutput:
    """
    Executes one kernel invocation.

    Args:
        variant (KernelVariant): Kernel to run; must match the inputs.
        inputs (KernelInputs): Kernel arguments.
        output (Optional[KernelOutput]): Preallocated output, allocated when omitted.
        workers (Optional[int]): Worker-pool width, default os.cpu_count().
        trace (bool): Record the barrier phases of every work-group.

    Returns:
        KernelOutput: Stiffness buffer, write counts, flop counts and the optional trace.

    Raises:
        ContractViolationError: When variant, plan, buffers or output disagree.
        InvertedElementError: When a device-computed Jacobian has det <= 0.
    """

    if variant is not inputs.variant:
        raise ContractViolationError(
            f"Inputs built for {inputs.variant.value} passed to {variant.value}")
    inputs.validate()
    plan = inputs.plan
    if output is None:
        output = KernelOutput.allocate(plan, inputs.precision)
    expected_shape = (plan.elems_per_kernel, plan.n_shape, N_EQ, plan.n_shape, N_EQ)
    if output.stiffness_buffer.shape != expected_shape:
        raise ContractViolationError(
            f"Output buffer {output.stiffness_buffer.shape} does not match plan {expected_shape}")
    if output.stiffness_buffer.size * FLOAT_BYTES != plan.output_bytes:
        raise ContractViolationError("Output buffer size differs from plan.output_bytes",
                                     output_bytes=plan.output_bytes)

    groups = [group for group in range(plan.n_work_groups) if len(plan.work_group_elements(group))]
    with ThreadPoolExecutor(max_workers=workers or os.cpu_count()) as pool:
        results = list(pool.map(lambda group: _run_work_group(inputs, output, group, trace), groups))
    for counter, _ in results:
        output.flops.merge(counter)
    if trace:
        output.barrier_trace = {group: labels for group, (_, labels) in zip(groups, results)}
    logger.info(f"{variant.value} p={plan.order_p}: {plan.elems_per_kernel} elements, "
                f"{len(groups)} work-groups, {output.flops.total} flops")
    return output


def convert_output(output: KernelOutput, element_ids: Sequence[int], order_p: int) -> List[ElementStiffness]:
    """Canonical wide-precision ElementStiffness records in buffer order."""

    matrices = output.matrices.astype(np.float64)
    return [ElementStiffness(order_p, N_EQ, matrices[index], element_ids[index])
            for index in range(output.n_elements)]


def flop_breakdown(variant: KernelVariant, plan: ExecutionPlan) -> Dict[str, int]:
    """Modelled per-element counts by phase."""

    return element_flops(plan.n_parts, plan.threads_per_part, n_quadrature_points(plan.order_p),
                         plan.n_shape, variant.computes_jacobian)


def flop_model(variant: KernelVariant, plan: ExecutionPlan, p: Optional[int] = None) -> int:
    """
    Closed-form operations per element: n_parts * wg * bpt * N_Q * 63 block updates plus the
    per-part Jacobian, shape-derivative and scaling work and the per-element coefficients.

    Raises:
        ConfigurationError: When ``p`` disagrees with the plan.
    """

    if p is not None and p != plan.order_p:
        raise ConfigurationError(f"Plan of order {plan.order_p} queried for p={p}")
    return sum(flop_breakdown(variant, plan).values())


@dataclass
class BatchResult:
    """Stiffness matrices of a batch with per-invocation plans, flops and phase times."""

    stiffness: List[ElementStiffness]
    plans: List[ExecutionPlan]
    flops: FlopCounter
    timings: Dict[str, float]
    transfer_bytes: int = 0
    outputs: List[KernelOutput] = field(default_factory=list)


def invocation_ranges(plan: ExecutionPlan, n_elements: int) -> List[Tuple[int, int]]:
    """[start, stop) element ranges of the invocations covering ``n_elements``."""

    size = plan.elems_per_kernel
    return [(start, min(start + size, n_elements)) for start in range(0, n_elements, size)]


def run_batch_detailed(
    variant: KernelVariant,
    dev: DeviceSpec,
    p: int,
    mesh: Sequence[PrismGeometry],
    materials: MaterialField,
    precision: Precision = Precision.SINGLE,
    occupancy_groups: Optional[int] = None,
    wg_override: Optional[int] = None,
    workers: Optional[int] = None,
    keep_outputs: bool = False
) -> BatchResult:
    """
    Integrates a mesh with as many invocations as the plan requires, timing every phase.

    Phases: input_preparation, buffer_initialization, input_transfer, kernel_compute,
    output_conversion (seconds, summed over invocations).
    """

    if not mesh:
        raise ConfigurationError("Cannot integrate an empty mesh")
    if len(materials) != len(mesh):
        raise ConfigurationError(f"{len(materials)} materials for {len(mesh)} elements")
    rule = prism_quadrature(p)
    shapes = tabulate_shapes(p, rule)
    full = plan_execution(dev, p, variant, len(mesh), occupancy_groups, wg_override)
    timings = {phase: 0.0 for phase in ("input_preparation", "buffer_initialization",
                                        "input_transfer", "kernel_compute", "output_conversion")}
    stiffness: List[ElementStiffness] = []
    plans: List[ExecutionPlan] = []
    outputs: List[KernelOutput] = []
    flops = FlopCounter()
    transfer_bytes = 0
    for start, stop in invocation_ranges(full, len(mesh)):
        plan = clip_plan(full, stop - start)
        tick = time.perf_counter()
        inputs = build_kernel_inputs(variant, plan, rule, shapes, mesh[start:stop],
                                     materials.subset(start, stop), precision, start)
        timings["input_preparation"] += time.perf_counter() - tick

        tick = time.perf_counter()
        output = KernelOutput.allocate(plan, precision)
        timings["buffer_initialization"] += time.perf_counter() - tick

        tick = time.perf_counter()
        device_inputs = transfer_inputs(inputs)
        timings["input_transfer"] += time.perf_counter() - tick
        transfer_bytes += inputs.transfer_bytes

        tick = time.perf_counter()
        run_kernel(variant, device_inputs, output, workers)
        timings["kernel_compute"] += time.perf_counter() - tick

        tick = time.perf_counter()
        stiffness += convert_output(output, inputs.element_ids, p)
        timings["output_conversion"] += time.perf_counter() - tick

        flops.merge(output.flops)
        plans.append(plan)
        if keep_outputs:
            outputs.append(output)
    logger.info(f"{variant.value} p={p}: {len(mesh)} elements in {len(plans)} invocation(s), "
                f"{flops.total} flops")
    return BatchResult(stiffness, plans, flops, timings, transfer_bytes, outputs)


def run_batch(
    variant: KernelVariant,
    dev: DeviceSpec,
    p: int,
    mesh: Sequence[PrismGeometry],
    materials: MaterialField,
    precision: Precision = Precision.SINGLE,
    **kwargs
) -> List[ElementStiffness]:
    """
    Integrates a mesh on the virtual device.

    Returns:
        List[ElementStiffness]: One matrix per element, in mesh order.
    """

    return run_batch_detailed(variant, dev, p, mesh, materials, precision, **kwargs).stiffness


def dump_buffers(directory: str, inputs: KernelInputs, output: Optional[KernelOutput] = None) -> Dict:
    """
    Writes every buffer as a flat little-endian float32 file plus ``manifest.json``.

    Returns:
        dict: The manifest.
    """

    files = {}
    for name, buffer in inputs.buffers().items():
        if name == "exec_params":
            continue
        files[name] = {"file": f"{name}.f32", "shape": list(buffer.shape),
                       "bytes": write_f32(os.path.join(directory, f"{name}.f32"), buffer)}
    if output is not None:
        files["stiffness"] = {"file": "stiffness.f32", "shape": list(output.matrices.shape),
                              "bytes": write_f32(os.path.join(directory, "stiffness.f32"),
                                                 output.matrices)}
    manifest = {
        "variant": inputs.variant,
        "precision": inputs.precision,
        "plan": inputs.plan.summary(),
        "exec_params": inputs.exec_params,
        "element_ids": list(inputs.element_ids),
        "buffers": files,
    }
    write_json(os.path.join(directory, "manifest.json"), manifest)
    return manifest
