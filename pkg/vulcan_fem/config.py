"""
vulcan_fem/config.py

Run configuration shared by the ``verify``, ``plan`` and ``bench`` commands. A RunConfig is built
from command-line options, optionally seeded from a JSON file whose keys mirror the flag names;
options given on the command line win over file values.
"""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .buffers import read_json
from .coefficients import MaterialData, MaterialField
from .errors import ConfigurationError
from .geometry import MAX_DISTORTION, PrismGeometry, generate_box_mesh
from .kernels import Precision
from .logger import get_logger
from .planner import DeviceSpec, KernelVariant, load_device_profile, plan_execution
from .reference_element import MAX_ORDER, MIN_ORDER, check_order

logger = get_logger(__name__)

COMMANDS = ("verify", "plan", "bench")
DEFAULT_PROFILE = "gtx580"
DEFAULT_ORDERS = (2, 3, 4, 5)
DEFAULT_PLAN_ORDERS = (2, 3, 4, 5, 6, 7)
DEFAULT_MESH = (4, 4, 4)
DEFAULT_DISTORTION = 0.1
DEFAULT_SEED = 42
DEFAULT_MATERIAL = MaterialData(2.5, 0.25)

OPTION_KEYS = (
    "profile", "p", "variant", "mesh", "distortion", "seed", "precision", "material",
    "materials", "occupancy", "wg", "workers", "elements", "repetitions", "warmup", "csv",
    "long_csv", "json", "dump_buffers", "check_tables", "inject_inverted",
)


def parse_orders(value: Any) -> Tuple[int, ...]:
    """
    Reads approximation orders from ``5``, ``"5"``, ``"2..5"``, ``"2,4"`` or ``[2, 4]``.

    Raises:
        ConfigurationError: When the value cannot be read.
        DomainError: When an order lies outside [1, 7].
    """

    try:
        if isinstance(value, str):
            text = value.strip()
            if ".." in text:
                low, high = text.split("..")
                orders = list(range(int(low), int(high) + 1))
            else:
                orders = [int(part) for part in text.split(",")]
        elif isinstance(value, int):
            orders = [value]
        else:
            orders = [int(item) for item in value]
    except (TypeError, ValueError) as e:
        raise ConfigurationError(
            f"Failed to read orders {value!r}; expected e.g. 5, 2..5 or 2,4", p=value) from e
    if not orders:
        raise ConfigurationError(f"No orders in {value!r}", p=value)
    return tuple(check_order(p) for p in sorted(set(orders)))


def parse_variants(value: Any) -> Tuple[KernelVariant, ...]:
    """Reads ``"all"``, ``"reg-jac,shm-nojac"`` or a list of variant names."""

    if isinstance(value, str):
        if value.strip().lower() == "all":
            return tuple(KernelVariant)
        value = value.split(",")
    variants = [item if isinstance(item, KernelVariant) else KernelVariant.parse(str(item))
                for item in value]
    return tuple(dict.fromkeys(variants))


def parse_mesh(value: Any) -> Tuple[int, int, int]:
    """Reads ``"nx,ny,nz"`` or ``[nx, ny, nz]``."""

    parts = value.split(",") if isinstance(value, str) else value
    try:
        dims = tuple(int(part) for part in parts)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Failed to read mesh {value!r}; expected nx,ny,nz",
                                 mesh=value) from e
    if len(dims) != 3 or min(dims) < 1:
        raise ConfigurationError(f"Mesh needs three positive cell counts, got {value!r}",
                                 mesh=value)
    return dims


def parse_material(value: Any) -> MaterialData:
    """Reads ``"E,nu"`` or ``[E, nu]``."""

    if isinstance(value, str):
        return MaterialData.parse(value)
    try:
        young, nu = (float(x) for x in value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Failed to read material {value!r}; expected [E, nu]",
                                 material=repr(value)) from e
    return MaterialData(young, nu)


def parse_material_pairs(value: Any) -> List[List[float]]:
    """Reads per-element ``[[E, nu], ...]`` pairs."""

    if isinstance(value, str):
        raise ConfigurationError(f"materials must be a list of [E, nu] pairs, got {value!r}",
                                 materials=value)
    try:
        return [[float(young), float(nu)] for young, nu in value]
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Failed to read materials {value!r}; expected [[E, nu], ...]",
                                 materials=repr(value)) from e


def _positive(name: str, value: Optional[int], minimum: int = 1) -> None:
    if value is not None and (isinstance(value, bool) or not isinstance(value, int)
                              or value < minimum):
        raise ConfigurationError(f"--{name.replace('_', '-')} must be an integer >= {minimum}, "
                                 f"got {value!r}", **{name: value})


@dataclass
class RunConfig:
    """
    Validated options of one command.

    Attributes:
        command (str): verify, plan or bench.
        profile (str): Device profile path or packaged name.
        orders (Tuple[int, ...]): Approximation orders.
        variants (Tuple[KernelVariant, ...]): Kernel variants.
        mesh (Tuple[int, int, int]): Cells per axis; the mesh has 2 nx ny nz prisms.
        distortion (float): Interior vertex perturbation.
        seed (int): Mesh perturbation seed.
        precision (Precision): Kernel buffer precision.
        material (MaterialData): Global material.
        materials (Optional[List[List[float]]]): Per-element (E, nu) pairs replacing ``material``.
        occupancy (Optional[int]): Work-groups per compute unit.
        wg (Optional[int]): Work-group size override.
        workers (Optional[int]): Worker-pool width, None for os.cpu_count().
        elements (Optional[int]): Elements to plan for (plan command).
        repetitions (int): Timed repetitions (bench).
        warmup (int): Untimed runs before the timed ones (bench).
        csv_path, long_csv_path, json_path (Optional[str]): Report outputs.
        dump_dir (Optional[str]): Directory for raw kernel buffers.
        check_tables (bool): Compare the planner with the profile's published tables.
        inject_inverted (Optional[int]): Mesh index of an element to turn inside out (verify).
    """

    command: str = "verify"
    profile: str = DEFAULT_PROFILE
    orders: Tuple[int, ...] = DEFAULT_ORDERS
    variants: Tuple[KernelVariant, ...] = tuple(KernelVariant)
    mesh: Tuple[int, int, int] = DEFAULT_MESH
    distortion: float = DEFAULT_DISTORTION
    seed: int = DEFAULT_SEED
    precision: Precision = Precision.SINGLE
    material: MaterialData = DEFAULT_MATERIAL
    materials: Optional[List[List[float]]] = None
    occupancy: Optional[int] = None
    wg: Optional[int] = None
    workers: Optional[int] = None
    elements: Optional[int] = None
    repetitions: int = 5
    warmup: int = 1
    csv_path: Optional[str] = None
    long_csv_path: Optional[str] = None
    json_path: Optional[str] = None
    dump_dir: Optional[str] = None
    check_tables: bool = False
    inject_inverted: Optional[int] = None
    _device: Optional[DeviceSpec] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_options(
        cls,
        command: str,
        options: Mapping[str, Any],
        config_path: Optional[str] = None
    ) -> "RunConfig":
        """
        Builds and validates a configuration.

        Args:
            command (str): verify, plan or bench.
            options (Mapping[str, Any]): Option values keyed as in OPTION_KEYS; None means unset.
            config_path (Optional[str]): JSON file with defaults for unset options.

        Returns:
            RunConfig: The validated configuration.

        Raises:
            ConfigurationError: For unknown keys, unreadable values or violated limits.
        """

        if command not in COMMANDS:
            raise ConfigurationError(f"Unknown command {command!r}; expected one of {COMMANDS}")
        merged: Dict[str, Any] = {}
        if config_path is not None:
            document = read_json(config_path)
            if not isinstance(document, dict):
                raise ConfigurationError(f"Config file {config_path} must hold a JSON object")
            unknown = sorted(set(document) - set(OPTION_KEYS))
            if unknown:
                raise ConfigurationError(f"Unknown keys in config file {config_path}: {unknown}",
                                         keys=unknown)
            merged.update(document)
        merged.update({key: value for key, value in options.items() if value is not None})
        return cls._from_values(command, merged).validate()

    @classmethod
    def _from_values(cls, command: str, values: Mapping[str, Any]) -> "RunConfig":
        default_orders = DEFAULT_PLAN_ORDERS if command == "plan" else DEFAULT_ORDERS
        config = cls(command=command, orders=parse_orders(values.get("p", default_orders)))
        if "profile" in values:
            config.profile = str(values["profile"])
        if "variant" in values:
            config.variants = parse_variants(values["variant"])
        if "mesh" in values:
            config.mesh = parse_mesh(values["mesh"])
        if "precision" in values:
            config.precision = Precision.parse(str(values["precision"]))
        if "material" in values:
            config.material = parse_material(values["material"])
        if "materials" in values:
            config.materials = parse_material_pairs(values["materials"])
        if "distortion" in values:
            try:
                config.distortion = float(values["distortion"])
            except (TypeError, ValueError) as e:
                raise ConfigurationError(
                    f"--distortion must be a number, got {values['distortion']!r}") from e
        for key in ("seed", "occupancy", "wg", "workers", "elements", "repetitions", "warmup",
                    "inject_inverted"):
            if key in values:
                setattr(config, key, values[key])
        for key, attribute in (("csv", "csv_path"), ("long_csv", "long_csv_path"),
                               ("json", "json_path"), ("dump_buffers", "dump_dir")):
            if key in values:
                setattr(config, attribute, str(values[key]))
        config.check_tables = bool(values.get("check_tables", False))
        return config

    @property
    def n_elements(self) -> int:
        nx, ny, nz = self.mesh
        return 2 * nx * ny * nz

    def device(self) -> DeviceSpec:
        """The device profile, loaded once."""

        if self._device is None:
            self._device = load_device_profile(self.profile)
        return self._device

    def validate(self) -> "RunConfig":
        """
        Checks every option and the planner preconditions of each (p, variant) pair before any
        buffer is allocated.

        Raises:
            ConfigurationError: For invalid options.
            CapacityError: When a requested order cannot be planned on the device.
        """

        if not MIN_ORDER <= min(self.orders) <= max(self.orders) <= MAX_ORDER:
            raise ConfigurationError(f"Orders must lie in [{MIN_ORDER}, {MAX_ORDER}]")
        if not self.variants:
            raise ConfigurationError("At least one kernel variant is needed")
        if not 0.0 <= self.distortion < MAX_DISTORTION:
            raise ConfigurationError(
                f"--distortion must lie in [0, {MAX_DISTORTION}), got {self.distortion}",
                distortion=self.distortion)
        _positive("seed", self.seed, minimum=0)
        for name in ("occupancy", "wg", "workers", "elements", "repetitions"):
            _positive(name, getattr(self, name))
        _positive("warmup", self.warmup, minimum=0)
        if self.materials is not None and len(self.materials) != self.n_elements:
            raise ConfigurationError(
                f"{len(self.materials)} material pairs for a mesh of {self.n_elements} elements",
                materials=len(self.materials), elements=self.n_elements)
        if self.inject_inverted is not None:
            _positive("inject_inverted", self.inject_inverted, minimum=0)
            if self.inject_inverted >= self.n_elements:
                raise ConfigurationError(
                    f"--inject-inverted {self.inject_inverted} is outside the mesh of "
                    f"{self.n_elements} elements", inject_inverted=self.inject_inverted)
        for path in (self.csv_path, self.long_csv_path, self.json_path):
            directory = os.path.dirname(os.path.abspath(path)) if path else None
            if directory and os.path.exists(directory) and not os.path.isdir(directory):
                raise ConfigurationError(f"Cannot write {path}: {directory} is not a directory")
        self.material_field()

        dev = self.device()
        n_available = self.elements if self.command == "plan" else None
        for p in self.orders:
            for variant in self.variants:
                plan_execution(dev, p, variant, n_available, self.occupancy, self.wg)
        logger.debug(f"Validated {self.command} config: profile {dev.name}, orders {self.orders}, "
                     f"{len(self.variants)} variant(s), {self.n_elements} elements")
        return self

    def material_field(self, n_elements: Optional[int] = None) -> MaterialField:
        """Per-element materials for the first ``n_elements`` elements (default: the mesh)."""

        n = self.n_elements if n_elements is None else n_elements
        if self.materials is not None:
            return MaterialField.from_pairs(self.materials).subset(0, n)
        return MaterialField.uniform(self.material, n)

    def build_mesh(self) -> List[PrismGeometry]:
        """The configured box mesh, with the requested element turned inside out."""

        mesh = generate_box_mesh(*self.mesh, distortion=self.distortion, seed=self.seed)
        if self.inject_inverted is not None:
            index = self.inject_inverted
            mesh[index] = invert_element(mesh[index])
            logger.warning(f"Injected inverted element {index} into the mesh")
        return mesh


def invert_element(geom: PrismGeometry) -> PrismGeometry:
    """Swaps the bottom and top triangles, which flips the sign of the Jacobian determinant."""

    return PrismGeometry(geom.vertices[[3, 4, 5, 0, 1, 2]].copy(), geom.element_id)
