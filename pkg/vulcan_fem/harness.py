"""
vulcan_fem/harness.py

The ``verify``, ``plan`` and ``bench`` commands. Each runs on a validated RunConfig, prints a
text table and writes its JSON (and for ``bench`` CSV) reports. JSON reports are validated
against the schemas shipped in ``vulcan_fem/schemas``.

Timing is host-side wall clock around each phase; transfers are reported as byte counts only.
"""

import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, TextIO

import jsonschema
import numpy as np
import pandas as pd

from .buffers import read_json, write_json
from .coefficients import MaterialField
from .config import RunConfig
from .decorator import to_json
from .encoder import Encoder
from .errors import ConfigurationError, ContractViolationError, VerificationFailedError
from .flops import element_flops, jacobian_cost_note, jacobian_flop_figures
from .formatter import Formatter
from .geometry import PrismGeometry
from .integrate_ref import integrate_mesh
from .kernels import (build_kernel_inputs, dump_buffers, flop_model, run_batch_detailed,
                      run_kernel)
from .logger import get_logger
from .planner import (PACKAGE_DIR, DeviceSpec, ExecutionPlan, KernelVariant,
                      memory_accounting, plan_execution)
from .reference_element import (n_quadrature_points, n_shape_functions, prism_quadrature,
                                tabulate_shapes)
from .verification import CheckResult, run_verification, table_suite

logger = get_logger(__name__)
formatter = Formatter()

SCHEMAS_DIR = os.path.join(PACKAGE_DIR, "schemas")
VERIFY_SCHEMA = "verify_report.schema.json"
BENCH_SCHEMA = "bench_report.schema.json"

CPU_REFERENCE = "cpu-ref"
BENCH_PHASES = ("input_preparation", "buffer_initialization", "input_transfer",
                "kernel_compute", "output_conversion")
ID_COLUMNS = ("variant", "p", "device", "elements", "precision")
CSV_COLUMNS = (
    *ID_COLUMNS,
    *(f"{phase}_s" for phase in BENCH_PHASES),
    "total_s", "flops", "flops_per_element", "gflops", "input_bytes", "output_bytes",
    "input_jac_bytes", "input_nojac_bytes", "arithmetic_intensity",
)
TABLE_COLUMNS = ("variant", "p", "elements", "kernel_compute_s", "total_s",
                 "flops_per_element", "gflops", "arithmetic_intensity")


def validate_report(report: Dict[str, Any], schema_name: str) -> Dict[str, Any]:
    """
    Encodes a report to plain JSON values and validates it against a shipped schema.

    Raises:
        ContractViolationError: When the report does not match its schema.
    """

    document = json.loads(json.dumps(report, cls=Encoder))
    try:
        jsonschema.validate(instance=document,
                            schema=read_json(os.path.join(SCHEMAS_DIR, schema_name)))
    except jsonschema.ValidationError as e:
        raise ContractViolationError(f"Failed to validate report against {schema_name}: "
                                     f"{e.message}", path=list(e.absolute_path)) from e
    return document


def _print_checks(checks: Sequence[CheckResult], out: TextIO) -> None:
    print(formatter.table([check.row() for check in checks]), file=out)


def cli_verify(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """
    Runs the verification suites and reports every check.

    Returns:
        int: 0 when every check passed.

    Raises:
        VerificationFailedError: When at least one check failed; the report is written first.
        InvertedElementError: When the mesh holds an inverted element.
    """

    out = out or sys.stdout
    tick = time.perf_counter()
    report = run_verification(cfg)
    _print_checks(report.checks, out)
    print(jacobian_cost_note(), file=out)
    document = validate_report(report.as_dict(), VERIFY_SCHEMA)
    if cfg.json_path:
        write_json(cfg.json_path, document)
    elapsed = formatter.duration(time.perf_counter() - tick)
    print(f"{len(report.checks) - len(report.failures)} of {len(report.checks)} checks passed "
          f"in {elapsed}", file=out)
    if not report.passed:
        failed = [f"{check.suite}/{check.name}" + ("" if check.p is None else f"/p={check.p}")
                  for check in report.failures]
        raise VerificationFailedError(f"{len(failed)} of {len(report.checks)} checks failed",
                                      failed=failed)
    return 0


def plan_record(dev: DeviceSpec, plan: ExecutionPlan) -> Dict[str, Any]:
    """Plan summary with itemized memory, published residuals and the flop model."""

    accounting = memory_accounting(plan)
    return dict(plan.summary(),
                memory_bytes=accounting.items,
                published_residual_mb=accounting.residuals_mb(dev.reference, plan.order_p),
                flops_per_element=flop_model(plan.variant, plan),
                jacobian_flops=jacobian_flop_figures(plan.n_parts,
                                                     n_quadrature_points(plan.order_p),
                                                     plan.variant.computes_jacobian))


def plan_row(plan: ExecutionPlan) -> Dict[str, Any]:
    """Text-table row of a plan with its buffers in megabytes."""

    input_jac, input_nojac, output = memory_accounting(plan)
    row = {key: value for key, value in plan.summary().items() if not key.endswith("_mb")}
    row.update(output=formatter.megabytes(output), input_jac=formatter.megabytes(input_jac),
               input_nojac=formatter.megabytes(input_nojac))
    return row


@to_json(indent=2)
def plan_document(dev: DeviceSpec, plans: Sequence[ExecutionPlan],
                  checks: Sequence[CheckResult] = ()) -> Dict[str, Any]:
    return {"command": "plan", "device": dev.name,
            "plans": [plan_record(dev, plan) for plan in plans],
            "table_checks": list(checks)}


def cli_plan(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """
    Prints the execution plan of every (p, variant) pair as a table and as JSON.

    Raises:
        SharedMemoryExhaustedError: When a shared-memory variant cannot hold one block per thread.
        VerificationFailedError: With ``check_tables``, when a published value is not reproduced.
    """

    out = out or sys.stdout
    dev = cfg.device()
    plans = [plan_execution(dev, p, variant, cfg.elements, cfg.occupancy, cfg.wg)
             for p in cfg.orders for variant in cfg.variants]
    print(formatter.table([plan_row(plan) for plan in plans]), file=out)
    print(jacobian_cost_note(), file=out)
    checks: List[CheckResult] = table_suite(dev, required=True) if cfg.check_tables else []
    if checks:
        _print_checks(checks, out)
    text = plan_document(dev, plans, checks)
    print(text, file=out)
    if cfg.json_path:
        write_json(cfg.json_path, json.loads(text))
    failed = [check for check in checks if not check.passed]
    if failed:
        raise VerificationFailedError(
            f"{len(failed)} of {len(checks)} published planner values not reproduced",
            failed=[f"{check.name}/p={check.p}" for check in failed])
    return 0


@dataclass
class BenchReport:
    """
    Benchmark rows, one per (variant, p) plus one ``cpu-ref`` row per p.

    Per row: gflops = flops / kernel_compute_s / 1e9 and total_s is the sum of the phase medians.
    """

    device: str
    mesh: Dict[str, Any]
    precision: str
    repetitions: int
    warmup: int
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(CSV_COLUMNS))

    def long_frame(self) -> pd.DataFrame:
        """Plot-ready (id columns, metric, value) rows."""

        return self.frame().melt(id_vars=list(ID_COLUMNS), var_name="metric", value_name="value")

    def as_dict(self) -> Dict[str, Any]:
        return {"command": "bench", "device": self.device, "mesh": self.mesh,
                "precision": self.precision, "repetitions": self.repetitions,
                "warmup": self.warmup, "rows": self.rows}


def _median_timings(timings: Sequence[Dict[str, float]]) -> Dict[str, float]:
    return {phase: float(np.median([run[phase] for run in timings])) for phase in BENCH_PHASES}


def _row(variant: str, p: int, dev: DeviceSpec, elements: int, precision: str,
         timings: Dict[str, float], flops: int, input_bytes: int, output_bytes: int,
         input_jac_bytes: int, input_nojac_bytes: int) -> Dict[str, Any]:
    compute = timings["kernel_compute"]
    moved = input_bytes + output_bytes
    return {
        "variant": variant, "p": p, "device": dev.name, "elements": elements,
        "precision": precision,
        **{f"{phase}_s": timings[phase] for phase in BENCH_PHASES},
        "total_s": sum(timings.values()),
        "flops": flops,
        "flops_per_element": flops / elements,
        "gflops": flops / compute / 1e9 if compute > 0 else None,
        "input_bytes": input_bytes,
        "output_bytes": output_bytes,
        "input_jac_bytes": input_jac_bytes,
        "input_nojac_bytes": input_nojac_bytes,
        "arithmetic_intensity": flops / moved if moved else None,
    }


def bench_variant(
    cfg: RunConfig,
    variant: KernelVariant,
    p: int,
    mesh: Sequence[PrismGeometry],
    materials: MaterialField
) -> Dict[str, Any]:
    """
    Warmup runs followed by ``cfg.repetitions`` timed runs of one variant.

    Raises:
        ContractViolationError: When two repetitions count different flops.
    """

    dev = cfg.device()
    options = dict(occupancy_groups=cfg.occupancy, wg_override=cfg.wg, workers=cfg.workers)
    for _ in range(cfg.warmup):
        run_batch_detailed(variant, dev, p, mesh, materials, cfg.precision, **options)
    results = [run_batch_detailed(variant, dev, p, mesh, materials, cfg.precision, **options)
               for _ in range(cfg.repetitions)]
    flops = results[0].flops.total
    if any(result.flops.total != flops for result in results):
        raise ContractViolationError(f"{variant.value} p={p}: flop counts differ between runs")
    plans = results[0].plans
    accounting = [memory_accounting(plan) for plan in plans]
    return _row(variant.cli_name, p, dev, len(mesh), cfg.precision.value,
                _median_timings([result.timings for result in results]), flops,
                results[0].transfer_bytes, sum(plan.output_bytes for plan in plans),
                sum(item.input_jac_bytes for item in accounting),
                sum(item.input_nojac_bytes for item in accounting))


def bench_cpu_reference(
    cfg: RunConfig,
    p: int,
    mesh: Sequence[PrismGeometry],
    materials: MaterialField
) -> Dict[str, Any]:
    """The sequential optimized integrator on the same mesh, timed as kernel compute."""

    samples = []
    for repetition in range(cfg.warmup + cfg.repetitions):
        tick = time.perf_counter()
        integrate_mesh(mesh, materials, p, method="optimized", workers=cfg.workers)
        if repetition >= cfg.warmup:
            samples.append(time.perf_counter() - tick)
    timings = {phase: 0.0 for phase in BENCH_PHASES}
    timings["kernel_compute"] = float(np.median(samples))
    n_shape = n_shape_functions(p)
    per_element = sum(element_flops(1, n_shape ** 2, n_quadrature_points(p), n_shape,
                                    True).values())
    return _row(CPU_REFERENCE, p, cfg.device(), len(mesh), "f64", timings,
                per_element * len(mesh), 0, 0, 0, 0)


def dump_first_invocation(
    cfg: RunConfig,
    variant: KernelVariant,
    p: int,
    mesh: Sequence[PrismGeometry],
    materials: MaterialField
) -> Dict[str, Any]:
    """Runs the first invocation of ``variant`` again and writes its buffers under cfg.dump_dir."""

    plan = plan_execution(cfg.device(), p, variant, len(mesh), cfg.occupancy, cfg.wg)
    n = plan.elems_per_kernel
    rule = prism_quadrature(p)
    inputs = build_kernel_inputs(variant, plan, rule, tabulate_shapes(p, rule), mesh[:n],
                                 materials.subset(0, n), cfg.precision)
    output = run_kernel(variant, inputs, workers=cfg.workers)
    return dump_buffers(os.path.join(cfg.dump_dir, f"{variant.cli_name}-p{p}"), inputs, output)


def run_bench(cfg: RunConfig) -> BenchReport:
    dev = cfg.device()
    mesh = cfg.build_mesh()
    materials = cfg.material_field()
    nx, ny, nz = cfg.mesh
    report = BenchReport(
        device=dev.name,
        mesh={"nx": nx, "ny": ny, "nz": nz, "distortion": cfg.distortion, "seed": cfg.seed,
              "elements": len(mesh)},
        precision=cfg.precision.value, repetitions=cfg.repetitions, warmup=cfg.warmup)
    for p in cfg.orders:
        for variant in cfg.variants:
            report.rows.append(bench_variant(cfg, variant, p, mesh, materials))
            if cfg.dump_dir:
                dump_first_invocation(cfg, variant, p, mesh, materials)
        report.rows.append(bench_cpu_reference(cfg, p, mesh, materials))
        logger.info(f"Benchmarked p={p} on {len(mesh)} elements")
    return report


def _format_cell(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.4g}"
    return "" if value is None else value


def write_csv(frame: pd.DataFrame, path: str) -> None:
    """Writes ``frame`` without the index, creating the parent directory."""

    directory = os.path.dirname(path)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise ConfigurationError(f"Failed to write CSV {path}: {e}", path=path) from e


def cli_bench(cfg: RunConfig, out: Optional[TextIO] = None) -> BenchReport:
    """
    Benchmarks every (variant, p) and writes the CSV, long-format CSV and JSON reports that are
    configured.
    """

    out = out or sys.stdout
    report = run_bench(cfg)
    print(formatter.table([{column: _format_cell(row[column]) for column in TABLE_COLUMNS}
                           for row in report.rows]), file=out)
    document = validate_report(report.as_dict(), BENCH_SCHEMA)
    if cfg.csv_path:
        write_csv(report.frame(), cfg.csv_path)
    if cfg.long_csv_path:
        write_csv(report.long_frame(), cfg.long_csv_path)
    if cfg.json_path:
        write_json(cfg.json_path, document)
    return report
