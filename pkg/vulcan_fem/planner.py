"""
vulcan_fem/planner.py

Host-side execution planning for the integration kernels on a virtual device: work-group size,
blocks per thread, the number of parts each stiffness matrix is split into, elements per kernel
invocation and the memory footprint of one invocation.

Device profiles are JSON documents validated against ``schemas/device_profile.schema.json``. The
``tuning`` section holds the planner knobs (per-p maps keyed "1".."7" with a "default"):
    work_group_size     explicit work-group sizes
    occupancy_groups    active work-groups per compute unit
    shared_occupancy    work-groups sharing one compute unit's shared memory
    output_budget_mb    cap on the output array below max_alloc_bytes
    shared_reserve      staging bytes kept out of the shared-memory block budget
"""

import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterator, List, Mapping, Optional

import jsonschema

from .buffers import read_json
from .decorator import log
from .errors import (CapacityError, ConfigurationError, DomainError,
                     SharedMemoryExhaustedError)
from .formatter import BYTES_IN_MB
from .printable import Printable
from .reference_element import (N_DERIVATIVE_ROWS, check_order,
                                n_quadrature_points, n_shape_functions)

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
PROFILES_DIR = os.path.join(PACKAGE_DIR, "profiles")
PROFILE_SCHEMA = os.path.join(PACKAGE_DIR, "schemas", "device_profile.schema.json")

N_EQ = 3
FLOAT_BYTES = 4
BLOCK_BYTES = N_EQ * N_EQ * FLOAT_BYTES
EXEC_PARAMS_BYTES = 32
GEOMETRY_BYTES = 6 * 3 * FLOAT_BYTES
MATERIAL_BYTES = 2 * FLOAT_BYTES
JACOBIAN_RECORD_BYTES = 10 * FLOAT_BYTES
MAX_GRID_DIMENSION = 65535
OUTPUT_TOLERANCE = 0.005
HARDWARE_FIELDS = ("name", "global_mem_bytes", "max_alloc_bytes", "shared_mem_bytes",
                   "constant_mem_bytes", "max_work_group", "compute_units", "simd_width",
                   "max_total_threads")

DEFAULT_SHARED_RESERVE = {
    "geometry_bytes": GEOMETRY_BYTES,
    "coefficient_bytes": MATERIAL_BYTES,
    "jacobian_bytes": 40,
    "point_bytes": 16,
}


class Storage(Enum):
    REGISTERS = "registers"
    SHARED = "shared"


class JacobianSource(Enum):
    DEVICE_COMPUTED = "device_computed"
    PRECOMPUTED = "precomputed"


class KernelVariant(Enum):
    """The four kernel organizations: accumulator storage times Jacobian source."""

    REG_JAC = "REG_JAC"
    REG_NOJAC = "REG_NOJAC"
    SHM_JAC = "SHM_JAC"
    SHM_NOJAC = "SHM_NOJAC"

    @property
    def storage(self) -> Storage:
        return Storage.SHARED if self.value.startswith("SHM") else Storage.REGISTERS

    @property
    def jacobian_source(self) -> JacobianSource:
        if self.value.endswith("NOJAC"):
            return JacobianSource.PRECOMPUTED
        return JacobianSource.DEVICE_COMPUTED

    @property
    def computes_jacobian(self) -> bool:
        return self.jacobian_source is JacobianSource.DEVICE_COMPUTED

    @property
    def cli_name(self) -> str:
        return self.value.lower().replace("_", "-")

    @classmethod
    def parse(cls, text: str) -> "KernelVariant":
        """
        Accepts "reg-jac" as well as "REG_JAC".

        Raises:
            ConfigurationError: For an unknown name.
        """

        key = text.strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError as e:
            names = ", ".join(variant.cli_name for variant in cls)
            raise ConfigurationError(f"Unknown kernel variant {text!r}; expected one of {names}",
                                     variant=text) from e


def per_p(mapping: Mapping[str, Any], p: int, default: Any = None) -> Any:
    """Looks up ``p`` in a per-order map, then its "default" entry, then ``default``."""

    if str(p) in mapping:
        return mapping[str(p)]
    return mapping.get("default", default)


@dataclass(frozen=True, repr=False)
class PlannerTuning(Printable):
    """
    Documented planner knobs of a device profile.

    Attributes:
        work_group_size (Dict[str, int]): Per-p work-group sizes; empty means automatic.
        occupancy_groups (Dict[str, int]): Per-p active work-groups per compute unit.
        shared_occupancy (int): Work-groups dividing one compute unit's shared memory.
        output_budget_mb (Dict[str, float]): Per-p cap of the output array in MB.
        shared_reserve (Dict[str, int]): Per-group staging bytes (geometry, coefficients,
            Jacobian, point) kept out of the block budget.
    """

    work_group_size: Dict[str, int] = field(default_factory=dict)
    occupancy_groups: Dict[str, int] = field(default_factory=lambda: {"default": 1})
    shared_occupancy: int = 1
    output_budget_mb: Dict[str, float] = field(default_factory=dict)
    shared_reserve: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SHARED_RESERVE))

    @property
    def staging_bytes(self) -> int:
        return sum(self.shared_reserve.values())


@dataclass(frozen=True, repr=False)
class DeviceSpec(Printable):
    """
    Virtual device resources.

    Attributes:
        name (str): Profile name.
        global_mem_bytes (int): Global memory.
        max_alloc_bytes (int): Largest single allocation.
        shared_mem_bytes (int): Shared (local) memory per compute unit.
        constant_mem_bytes (int): Constant memory.
        max_work_group (int): Largest work-group.
        compute_units (int): Compute units.
        simd_width (int): Work-group sizes are multiples of this.
        max_total_threads (Optional[int]): Thread limit of one launch, default 65535 * max_work_group.
        tuning (PlannerTuning): Planner knobs.
        reference (Dict[str, Any]): Published characteristics used by :func:`check_tables`.
    """

    name: str
    global_mem_bytes: int
    max_alloc_bytes: int
    shared_mem_bytes: int
    constant_mem_bytes: int
    max_work_group: int
    compute_units: int
    simd_width: int = 64
    max_total_threads: Optional[int] = None
    tuning: PlannerTuning = field(default_factory=PlannerTuning)
    reference: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sizes = {key: getattr(self, key) for key in (
            "global_mem_bytes", "max_alloc_bytes", "shared_mem_bytes", "constant_mem_bytes",
            "max_work_group", "compute_units", "simd_width")}
        bad = {key: value for key, value in sizes.items() if value <= 0}
        if bad:
            raise ConfigurationError(f"Device {self.name}: sizes must be positive", **bad)
        if self.max_work_group % self.simd_width:
            raise ConfigurationError(
                f"Device {self.name}: simd_width {self.simd_width} does not divide "
                f"max_work_group {self.max_work_group}")
        if self.max_alloc_bytes > self.global_mem_bytes:
            raise ConfigurationError(
                f"Device {self.name}: max_alloc_bytes exceeds global_mem_bytes")
        if self.max_total_threads is None:
            object.__setattr__(self, "max_total_threads", MAX_GRID_DIMENSION * self.max_work_group)


def profile_path(path_or_name: str) -> str:
    """A path that exists is used as-is; otherwise the name is looked up in the packaged profiles."""

    if os.path.isfile(path_or_name):
        return path_or_name
    name = os.path.basename(path_or_name)
    if not name.endswith(".json"):
        name = f"{name}.json"
    return os.path.join(PROFILES_DIR, name)


def device_from_dict(document: Dict[str, Any]) -> DeviceSpec:
    """
    Builds a DeviceSpec from a profile document.

    Raises:
        ConfigurationError: When the document does not match the profile schema.
    """

    try:
        jsonschema.validate(instance=document, schema=read_json(PROFILE_SCHEMA))
    except jsonschema.ValidationError as e:
        raise ConfigurationError(f"Failed to validate device profile: {e.message}",
                                 path=list(e.absolute_path)) from e
    hardware = {key: value for key, value in document.items() if key in HARDWARE_FIELDS}
    tuning = document.get("tuning", {})
    reserve = dict(DEFAULT_SHARED_RESERVE, **tuning.get("shared_reserve", {}))
    return DeviceSpec(
        **hardware,
        tuning=PlannerTuning(
            work_group_size=dict(tuning.get("work_group_size", {})),
            occupancy_groups=dict(tuning.get("occupancy_groups", {"default": 1})),
            shared_occupancy=tuning.get("shared_occupancy", 1),
            output_budget_mb=dict(tuning.get("output_budget_mb", {})),
            shared_reserve=reserve,
        ),
        reference=document.get("reference", {}),
    )


@log
def load_device_profile(path_or_name: str) -> DeviceSpec:
    """
    Loads a device profile.

    Args:
        path_or_name (str): A JSON file path or a packaged profile name ("gtx580", "hd5870.json").

    Returns:
        DeviceSpec: The validated device.

    Raises:
        ConfigurationError: When the file is missing, malformed or invalid.
    """

    path = profile_path(path_or_name)
    if not os.path.isfile(path):
        raise ConfigurationError(f"Failed to load device profile {path_or_name!r}: no such file",
                                 path=path)
    return device_from_dict(read_json(path))


def _check_work_group(dev: DeviceSpec, wg: Any) -> int:
    if (isinstance(wg, bool) or not isinstance(wg, int) or wg <= 0 or wg % dev.simd_width
            or wg > dev.max_work_group):
        raise ConfigurationError(
            f"Work-group size {wg!r} must be a positive multiple of {dev.simd_width} "
            f"not above {dev.max_work_group}", work_group_size=wg, device=dev.name)
    return wg


def work_group_size(dev: DeviceSpec, p: int, override: Optional[int] = None) -> int:
    """
    Threads per work-group.

    An explicit ``override`` wins, then the profile's per-p value; otherwise the largest
    multiple of simd_width within max_work_group and the block count (at least simd_width).

    Raises:
        ConfigurationError: For an override that is not a valid work-group size.
    """

    p = check_order(p)
    if override is not None:
        return _check_work_group(dev, override)
    configured = per_p(dev.tuning.work_group_size, p)
    if configured is not None:
        return _check_work_group(dev, configured)
    limit = min(dev.max_work_group, n_shape_functions(p) ** 2)
    return max(dev.simd_width, limit // dev.simd_width * dev.simd_width)


def shared_reserve_bytes(dev: DeviceSpec, p: int) -> int:
    """Shape-function workspace (4 N_sh floats) plus the profile's staging bytes."""

    return N_DERIVATIVE_ROWS * n_shape_functions(p) * FLOAT_BYTES + dev.tuning.staging_bytes


def blocks_per_thread(
    dev: DeviceSpec,
    wg: int,
    variant: KernelVariant,
    p: int,
    occupancy_groups: Optional[int] = None
) -> int:
    """
    Blocks each thread keeps in shared memory.

    1 for register variants. Shared variants fill shared_mem / occupancy_groups minus the reserve
    with 36-byte blocks, never beyond what one pass over the matrix needs.

    Args:
        dev (DeviceSpec): Device.
        wg (int): Work-group size.
        variant (KernelVariant): Kernel variant.
        p (int): Approximation order.
        occupancy_groups (Optional[int]): Work-groups sharing the memory, default
            ``tuning.shared_occupancy``.

    Raises:
        SharedMemoryExhaustedError: When not even one block per thread fits.
    """

    p = check_order(p)
    if variant.storage is Storage.REGISTERS:
        return 1
    groups = occupancy_groups or dev.tuning.shared_occupancy
    budget = dev.shared_mem_bytes // groups - shared_reserve_bytes(dev, p)
    bpt = budget // (wg * BLOCK_BYTES)
    if bpt < 1:
        raise SharedMemoryExhaustedError(
            f"Shared memory of {dev.name} cannot hold one block per thread "
            f"(budget {budget} B for {wg} threads)",
            device=dev.name, p=p, work_group_size=wg, budget_bytes=budget,
            needed_bytes=wg * BLOCK_BYTES)
    return int(min(bpt, math.ceil(n_shape_functions(p) ** 2 / wg)))


def n_parts(n_blocks: int, wg: int, bpt: int) -> int:
    """ceil(n_blocks / (wg * bpt))."""

    if min(n_blocks, wg, bpt) < 1:
        raise DomainError("n_parts needs positive arguments", n_blocks=n_blocks, wg=wg, bpt=bpt)
    return -(-n_blocks // (wg * bpt))


def element_output_bytes(p: int) -> int:
    """(N_E N_sh)^2 floats."""

    return (N_EQ * n_shape_functions(p)) ** 2 * FLOAT_BYTES


@dataclass(frozen=True)
class ExecutionPlan:
    """
    Launch parameters of one kernel invocation.

    When clipped to fewer elements than a full invocation, the last work-group may hold fewer
    than ``elems_per_work_group`` elements.
    """

    variant: KernelVariant
    order_p: int
    device: str
    work_group_size: int
    n_blocks: int
    blocks_per_thread: int
    n_parts: int
    occupancy_groups: int
    elems_per_kernel: int
    elems_per_work_group: int
    n_work_groups: int
    output_bytes: int
    input_bytes_jac: int
    input_bytes_nojac: int
    shared_mem_bytes: int = 0
    shared_reserve_bytes: int = 0

    @property
    def n_shape(self) -> int:
        return n_shape_functions(self.order_p)

    @property
    def threads_per_part(self) -> int:
        return self.work_group_size * self.blocks_per_thread

    @property
    def total_threads(self) -> int:
        return self.n_work_groups * self.work_group_size

    @property
    def padding_blocks(self) -> int:
        return self.n_parts * self.threads_per_part - self.n_blocks

    @property
    def input_bytes(self) -> int:
        if self.variant.computes_jacobian:
            return self.input_bytes_jac
        return self.input_bytes_nojac

    def work_group_elements(self, group: int) -> range:
        """Element slots of one work-group."""

        start = group * self.elems_per_work_group
        return range(start, min(start + self.elems_per_work_group, self.elems_per_kernel))

    def summary(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value, "p": self.order_p, "device": self.device,
            "work_group_size": self.work_group_size, "n_blocks": self.n_blocks,
            "blocks_per_thread": self.blocks_per_thread, "n_parts": self.n_parts,
            "occupancy_groups": self.occupancy_groups,
            "elems_per_kernel": self.elems_per_kernel,
            "elems_per_work_group": self.elems_per_work_group,
            "n_work_groups": self.n_work_groups,
            "output_mb": round(self.output_bytes / BYTES_IN_MB, 2),
            "input_jac_mb": round(self.input_bytes_jac / BYTES_IN_MB, 2),
            "input_nojac_mb": round(self.input_bytes_nojac / BYTES_IN_MB, 2),
        }


@dataclass(frozen=True)
class MemoryAccounting:
    """
    Itemized kernel buffers of one invocation. Unpacks as
    (input_jac_bytes, input_nojac_bytes, output_bytes).
    """

    items: Dict[str, int]

    JAC_ITEMS = ("exec_params", "quadrature", "geometry", "coefficients", "shape_table")
    NOJAC_ITEMS = ("exec_params", "quadrature", "jacobian_terms", "coefficients", "shape_table")

    @property
    def input_jac_bytes(self) -> int:
        return sum(self.items[key] for key in self.JAC_ITEMS)

    @property
    def input_nojac_bytes(self) -> int:
        return sum(self.items[key] for key in self.NOJAC_ITEMS)

    @property
    def output_bytes(self) -> int:
        return self.items["output"]

    def __iter__(self) -> Iterator[int]:
        return iter((self.input_jac_bytes, self.input_nojac_bytes, self.output_bytes))

    def residuals_mb(self, reference: Mapping[str, Any], p: int) -> Dict[str, Optional[float]]:
        """Published minus itemized totals in MB, None where nothing is published."""

        rows = reference.get("rows", {})
        measured = {"input_jac_mb": self.input_jac_bytes, "input_nojac_mb": self.input_nojac_bytes,
                    "output_mb": self.output_bytes}
        result: Dict[str, Optional[float]] = {}
        for key, n_bytes in measured.items():
            published = per_p(rows.get(key, {}), p)
            result[key] = None if published is None else round(published - n_bytes / BYTES_IN_MB, 4)
        return result


def memory_accounting(
    plan: ExecutionPlan,
    p: Optional[int] = None,
    n_elements: Optional[int] = None
) -> MemoryAccounting:
    """
    Kernel buffer sizes for ``n_elements`` (default: the plan's elements per kernel).

    Items: exec_params (32 B), shape_table (4 N_sh N_Q floats), quadrature (4 N_Q floats),
    geometry (72 B per element), coefficients (E and nu, 8 B per element), jacobian_terms
    (N_Q records of 10 floats per element) and output ((3 N_sh)^2 floats per element).
    """

    p = check_order(plan.order_p if p is None else p)
    n = plan.elems_per_kernel if n_elements is None else n_elements
    n_q, n_sh = n_quadrature_points(p), n_shape_functions(p)
    return MemoryAccounting({
        "exec_params": EXEC_PARAMS_BYTES,
        "shape_table": N_DERIVATIVE_ROWS * n_sh * n_q * FLOAT_BYTES,
        "quadrature": 4 * n_q * FLOAT_BYTES,
        "geometry": n * GEOMETRY_BYTES,
        "coefficients": n * MATERIAL_BYTES,
        "jacobian_terms": n * n_q * JACOBIAN_RECORD_BYTES,
        "output": n * element_output_bytes(p),
    })


def _with_sizes(plan: ExecutionPlan) -> ExecutionPlan:
    accounting = memory_accounting(plan)
    return replace(plan, output_bytes=accounting.output_bytes,
                   input_bytes_jac=accounting.input_jac_bytes,
                   input_bytes_nojac=accounting.input_nojac_bytes)


def clip_plan(plan: ExecutionPlan, n_elements: int) -> ExecutionPlan:
    """
    Plan for an invocation with fewer elements.

    Work-groups are cut to at most ``n_elements``, elements spread as evenly as the
    work-group count allows.

    Raises:
        ConfigurationError: When ``n_elements`` is not in [1, plan.elems_per_kernel].
    """

    if not 1 <= n_elements <= plan.elems_per_kernel:
        raise ConfigurationError(
            f"Cannot clip a plan of {plan.elems_per_kernel} elements to {n_elements}",
            n_elements=n_elements, elems_per_kernel=plan.elems_per_kernel)
    if n_elements == plan.elems_per_kernel:
        return plan
    groups = min(plan.n_work_groups, n_elements)
    per_group = -(-n_elements // groups)
    return _with_sizes(replace(plan, elems_per_kernel=n_elements, elems_per_work_group=per_group,
                               n_work_groups=-(-n_elements // per_group)))


@log
def plan_execution(
    dev: DeviceSpec,
    p: int,
    variant: KernelVariant,
    n_elements_available: Optional[int] = None,
    occupancy_groups: Optional[int] = None,
    wg_override: Optional[int] = None
) -> ExecutionPlan:
    """
    Computes the launch parameters of one kernel invocation.

    Elements per kernel fill min(max_alloc_bytes, output budget) with stiffness matrices, spread
    over compute_units * occupancy work-groups. The occupancy is lowered when the memory cap
    cannot give every work-group an element.

    Args:
        dev (DeviceSpec): Device.
        p (int): Approximation order.
        variant (KernelVariant): Kernel variant.
        n_elements_available (Optional[int]): Elements left to integrate; None plans a full
            invocation.
        occupancy_groups (Optional[int]): Work-groups per compute unit, default from the profile.
        wg_override (Optional[int]): Explicit work-group size.

    Returns:
        ExecutionPlan: The plan, clipped to ``n_elements_available``.

    Raises:
        CapacityError: When one stiffness matrix exceeds max_alloc_bytes or one work-group
            exceeds the thread limit.
        SharedMemoryExhaustedError: See :func:`blocks_per_thread`.
    """

    p = check_order(p)
    if n_elements_available is not None and n_elements_available < 1:
        raise DomainError(f"At least one element is needed, got {n_elements_available}",
                          n_elements_available=n_elements_available)
    wg = work_group_size(dev, p, wg_override)
    bpt = blocks_per_thread(dev, wg, variant, p)
    n_blocks = n_shape_functions(p) ** 2

    elem_bytes = element_output_bytes(p)
    if elem_bytes > dev.max_alloc_bytes:
        raise CapacityError(
            f"One order-{p} stiffness matrix ({elem_bytes} B) exceeds max_alloc_bytes "
            f"{dev.max_alloc_bytes} of {dev.name}", p=p, element_bytes=elem_bytes,
            max_alloc_bytes=dev.max_alloc_bytes)
    budget = dev.max_alloc_bytes
    budget_mb = per_p(dev.tuning.output_budget_mb, p)
    if budget_mb is not None:
        budget = min(budget, int(budget_mb * BYTES_IN_MB))
    mem_cap = max(1, budget // elem_bytes)

    occupancy = occupancy_groups or per_p(dev.tuning.occupancy_groups, p, 1)
    if occupancy < 1:
        raise ConfigurationError(f"occupancy_groups must be >= 1, got {occupancy}",
                                 occupancy_groups=occupancy)
    occupancy = max(1, min(occupancy, mem_cap // dev.compute_units))
    n_work_groups = min(dev.compute_units * occupancy, mem_cap, dev.max_total_threads // wg)
    if n_work_groups < 1:
        raise CapacityError(f"Work-group of {wg} threads exceeds the thread limit of {dev.name}",
                            work_group_size=wg, max_total_threads=dev.max_total_threads)
    per_group = max(1, mem_cap // n_work_groups)

    plan = _with_sizes(ExecutionPlan(
        variant=variant, order_p=p, device=dev.name, work_group_size=wg, n_blocks=n_blocks,
        blocks_per_thread=bpt, n_parts=n_parts(n_blocks, wg, bpt), occupancy_groups=occupancy,
        elems_per_kernel=per_group * n_work_groups, elems_per_work_group=per_group,
        n_work_groups=n_work_groups, output_bytes=0, input_bytes_jac=0, input_bytes_nojac=0,
        shared_mem_bytes=dev.shared_mem_bytes // dev.tuning.shared_occupancy,
        shared_reserve_bytes=shared_reserve_bytes(dev, p)))
    if n_elements_available is not None and n_elements_available < plan.elems_per_kernel:
        plan = clip_plan(plan, n_elements_available)
    return plan


@dataclass(frozen=True)
class TableCheck:
    """One published planner value against its computed counterpart."""

    name: str
    p: int
    expected: float
    actual: float
    tolerance: float
    passed: bool


def _compare(name: str, p: int, expected: float, actual: float, tolerance: float) -> TableCheck:
    if tolerance:
        passed = abs(actual - expected) <= tolerance * abs(expected)
    else:
        passed = actual == expected
    return TableCheck(name, p, expected, actual, tolerance, bool(passed))


def check_tables(dev: DeviceSpec) -> List[TableCheck]:
    """
    Compares planner output with the profile's ``reference.rows``.

    Parts, blocks per thread and element counts must match exactly; output sizes within 0.5%.

    Raises:
        ConfigurationError: When the profile carries no reference rows.
    """

    rows = dev.reference.get("rows")
    if not rows:
        raise ConfigurationError(f"Device profile {dev.name} has no reference tables",
                                 device=dev.name)
    orders = sorted({int(key) for row in rows.values() for key in row if key != "default"})
    checks: List[TableCheck] = []
    for p in orders:
        reg = plan_execution(dev, p, KernelVariant.REG_JAC)
        shm = plan_execution(dev, p, KernelVariant.SHM_JAC)
        actual = {
            "reg_parts": reg.n_parts,
            "shm_parts": shm.n_parts,
            "blocks_per_thread": shm.blocks_per_thread,
            "elems_per_kernel": reg.elems_per_kernel,
            "elems_per_work_group": reg.elems_per_work_group,
            "output_mb": reg.output_bytes / BYTES_IN_MB,
        }
        for name, value in actual.items():
            expected = rows.get(name, {}).get(str(p))
            if expected is None:
                continue
            tolerance = OUTPUT_TOLERANCE if name == "output_mb" else 0.0
            checks.append(_compare(name, p, expected, value, tolerance))
    return checks
