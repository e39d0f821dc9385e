"""
Example

This module walks through vulcan_fem from a script: it plans a kernel launch on a packaged
device profile, integrates a small distorted prism mesh with two kernel variants, compares the
matrices with the sequential reference and reports flops and timings.

Functions:
- show_plan: Plans one order-5 launch and logs its launch parameters and buffer sizes.
- integrate: Runs one kernel variant over a mesh and returns the batch result.
- compare: Relative error of kernel matrices against the wide-precision reference.
- plan_json: The plan summary serialized to JSON.

Logging Levels:
- DEBUG: Call and return lines of the decorated library functions.
- INFO: Invocation summaries and the results of this walkthrough.
- WARNING: Injected faults such as an inverted element.
- ERROR: Failed runs, with the machine-readable error payload.
"""

import os
import time

os.environ["VULCAN_LOG_LEVEL"] = "INFO"
os.environ["VULCAN_LOG_PATH"] = "logs"
os.environ["VULCAN_LOG_NAME"] = "example"

# pylint: disable=wrong-import-position
from vulcan_fem.coefficients import MaterialData, MaterialField
from vulcan_fem.config import invert_element
from vulcan_fem.decorator import log, to_json
from vulcan_fem.errors import InvertedElementError
from vulcan_fem.formatter import Formatter
from vulcan_fem.geometry import generate_box_mesh
from vulcan_fem.integrate_ref import integrate_mesh
from vulcan_fem.kernels import flop_model, run_batch_detailed
from vulcan_fem.logger import Logger
from vulcan_fem.planner import KernelVariant, load_device_profile, plan_execution

logger = Logger(__name__)
formatter = Formatter()


@log(level="INFO")
def show_plan(device, p, variant):
    """Plans one full launch and logs what it holds."""
    plan = plan_execution(device, p, variant)
    logger.info(f"{variant.value} p={p}: {plan.n_parts} parts, {plan.elems_per_kernel} elements "
                f"per kernel, output {formatter.megabytes(plan.output_bytes)}")
    return plan


def integrate(variant, device, p, mesh, materials):
    """Integrates ``mesh`` with one variant."""
    return run_batch_detailed(variant, device, p, mesh, materials)


def compare(result, reference):
    """Largest relative error of a batch against the reference matrices."""
    return max(matrix.relative_error(ref) for matrix, ref in zip(result.stiffness, reference))


@to_json(indent=2)
def plan_json(plan):
    """The plan summary as JSON."""
    return plan.summary()


device = load_device_profile("gtx580")
plan = show_plan(device, 5, KernelVariant.REG_JAC)
logger.info(f"Plan document:\n{plan_json(plan)}")

P = 3
mesh = generate_box_mesh(2, 2, 2, distortion=0.1, seed=7)
materials = MaterialField.uniform(MaterialData(2.5, 0.25), len(mesh))
reference = integrate_mesh(mesh, materials, P, method="generic")

for variant in (KernelVariant.REG_JAC, KernelVariant.SHM_NOJAC):
    tick = time.perf_counter()
    result = integrate(variant, device, P, mesh, materials)
    elapsed = formatter.duration(time.perf_counter() - tick)
    per_element = flop_model(variant, result.plans[0])
    logger.info(f"{variant.cli_name}: error {compare(result, reference):.2e}, "
                f"{per_element} flops per element, {elapsed}")

# An inside-out element is reported with its id and the offending point
broken = list(mesh)
broken[5] = invert_element(mesh[5])
logger.warning("Running with element 5 turned inside out")
try:
    integrate(KernelVariant.REG_JAC, device, P, broken, materials)
except InvertedElementError as e:
    logger.error(f"Caught an exception as expected: {e.to_dict()}")
