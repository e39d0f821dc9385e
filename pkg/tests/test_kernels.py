# tests/test_kernels.py
import json
from dataclasses import replace

import numpy as np
import pytest

from vulcan_fem.coefficients import MaterialData, MaterialField
from vulcan_fem.config import invert_element
from vulcan_fem.errors import ConfigurationError, ContractViolationError, InvertedElementError
from vulcan_fem.flops import element_flops
from vulcan_fem.geometry import generate_box_mesh
from vulcan_fem.integrate_ref import integrate_mesh
from vulcan_fem.kernels import (KernelOutput, Precision, build_kernel_inputs, dump_buffers,
                                flop_model, invocation_ranges, run_batch, run_batch_detailed,
                                run_kernel)
from vulcan_fem.planner import KernelVariant, load_device_profile, plan_execution
from vulcan_fem.reference_element import prism_quadrature, tabulate_shapes

VARIANTS = list(KernelVariant)


@pytest.fixture(scope="module")
def device():
    return load_device_profile("gtx580")


@pytest.fixture(scope="module")
def mesh():
    return generate_box_mesh(2, 1, 1, 0.15, seed=11)


@pytest.fixture(scope="module")
def materials():
    return MaterialField.from_pairs([[1.0, 0.2], [2.5, 0.25], [3.0, 0.1], [0.5, 0.35]])


def _inputs(device, variant, p, mesh, materials, precision=Precision.SINGLE):
    plan = plan_execution(device, p, variant, len(mesh))
    rule = prism_quadrature(p)
    return build_kernel_inputs(variant, plan, rule, tabulate_shapes(p, rule), mesh, materials,
                               precision)


@pytest.mark.parametrize("text, expected", [("f32", Precision.SINGLE), ("double", Precision.WIDE)])
def test_precision_parse(text, expected) -> None:
    assert Precision.parse(text) is expected


def test_precision_parse_unknown() -> None:
    with pytest.raises(ConfigurationError):
        Precision.parse("f16")


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("p", [1, 2])
def test_kernels_match_oracle(device, mesh, materials, variant, p) -> None:
    """Every variant reproduces the wide-precision reference in single precision."""

    oracle = integrate_mesh(mesh, materials, p, method="generic", workers=1)
    result = run_batch(variant, device, p, mesh, materials)
    errors = [kernel.relative_error(ref) for kernel, ref in zip(result, oracle)]
    assert max(errors) < 5e-5, f"Expected errors below 5e-5, got {errors}"
    assert [stiffness.element_id for stiffness in result] == [0, 1, 2, 3]


@pytest.mark.parametrize("variant", [KernelVariant.REG_JAC, KernelVariant.SHM_NOJAC])
def test_wide_precision(device, mesh, materials, variant) -> None:
    oracle = integrate_mesh(mesh, materials, 2, method="generic", workers=1)
    result = run_batch(variant, device, 2, mesh, materials, Precision.WIDE)
    errors = [kernel.relative_error(ref) for kernel, ref in zip(result, oracle)]
    assert max(errors) < 1e-10, f"Got {errors}"


def test_jacobian_source_agreement(device, mesh, materials) -> None:
    """Device-computed and precomputed Jacobians give the same matrices."""

    jac = run_batch(KernelVariant.REG_JAC, device, 2, mesh, materials)
    nojac = run_batch(KernelVariant.REG_NOJAC, device, 2, mesh, materials)
    errors = [a.relative_error(b) for a, b in zip(jac, nojac)]
    assert max(errors) < 1e-5, f"Got {errors}"


@pytest.mark.parametrize("variant", VARIANTS)
def test_coverage_and_flops(device, mesh, materials, variant) -> None:
    """Each block is written once, padding never, and the counts follow the flop model."""

    inputs = _inputs(device, variant, 2, mesh, materials)
    output = run_kernel(variant, inputs, workers=2)
    plan = inputs.plan
    assert output.write_counts.shape == (4, plan.n_parts * plan.threads_per_part)
    assert output.exact_coverage
    assert output.padding_writes == 0
    assert output.flops.total == flop_model(variant, plan) * 4
    assert output.flops_per_element == flop_model(variant, plan)


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_phase_counts_follow_model(device, mesh, materials, variant, p) -> None:
    """Each phase counted during execution matches the closed-form count of its plan."""

    inputs = _inputs(device, variant, p, mesh, materials)
    output = run_kernel(variant, inputs, workers=2)
    plan = inputs.plan
    n_shape = inputs.shape_table_buffer.shape[2]
    modelled = element_flops(plan.n_parts, plan.threads_per_part, len(inputs.quadrature_buffer),
                             n_shape, variant.computes_jacobian)
    expected = {phase: n * 4 for phase, n in modelled.items()}
    assert output.flops.counts == expected, f"Expected {expected}, got {output.flops.counts}"


@pytest.mark.parametrize("p", [2, 3, 4])
def test_variants_agree_pairwise(device, mesh, materials, p) -> None:
    """Register and shared-memory kernels, with and without device Jacobians, agree."""

    results = {variant: run_batch(variant, device, p, mesh, materials) for variant in VARIANTS}
    for first in VARIANTS:
        for second in VARIANTS:
            errors = [a.relative_error(b) for a, b in zip(results[first], results[second])]
            assert max(errors) < 1e-5, f"{first.value} vs {second.value} at p={p}: {errors}"


def test_deterministic_across_workers(device, mesh, materials) -> None:
    """The pool width never changes a single bit of the output."""

    inputs = _inputs(device, KernelVariant.SHM_JAC, 2, mesh, materials)
    first = run_kernel(KernelVariant.SHM_JAC, inputs, workers=1)
    second = run_kernel(KernelVariant.SHM_JAC, inputs, workers=4)
    assert np.array_equal(first.stiffness_buffer, second.stiffness_buffer)


def test_barrier_trace(device, mesh, materials) -> None:
    """Every part passes through the same barrier-separated phases."""

    inputs = _inputs(device, KernelVariant.REG_JAC, 2, mesh, materials)
    output = run_kernel(KernelVariant.REG_JAC, inputs, trace=True)
    assert set(output.barrier_trace) == set(range(inputs.plan.n_work_groups))
    labels = output.barrier_trace[0]
    assert labels[:4] == ["load_inputs", "barrier", "jacobian", "barrier"]
    assert labels[-2:] == ["write", "barrier"]
    assert len(labels) % 10 == 0


def test_variant_mismatch(device, mesh, materials) -> None:
    inputs = _inputs(device, KernelVariant.REG_JAC, 1, mesh, materials)
    with pytest.raises(ContractViolationError):
        run_kernel(KernelVariant.REG_NOJAC, inputs)


def test_output_mismatch(device, mesh, materials) -> None:
    inputs = _inputs(device, KernelVariant.REG_JAC, 1, mesh, materials)
    other_plan = plan_execution(device, 1, KernelVariant.REG_JAC, 3)
    with pytest.raises(ContractViolationError):
        run_kernel(KernelVariant.REG_JAC, inputs, KernelOutput.allocate(other_plan, Precision.SINGLE))


def test_build_inputs_count_mismatch(device, mesh, materials) -> None:
    plan = plan_execution(device, 1, KernelVariant.REG_JAC, 3)
    rule = prism_quadrature(1)
    with pytest.raises(ContractViolationError):
        build_kernel_inputs(KernelVariant.REG_JAC, plan, rule, tabulate_shapes(1, rule), mesh,
                            materials)


def test_input_buffers_follow_variant(device, mesh, materials) -> None:
    """JAC inputs carry vertices, NOJAC inputs carry Jacobian records; sizes match accounting."""

    jac = _inputs(device, KernelVariant.SHM_JAC, 2, mesh, materials)
    nojac = _inputs(device, KernelVariant.SHM_NOJAC, 2, mesh, materials)
    assert jac.jacobian_terms_buffer is None and jac.geometry_buffer.shape == (4, 6, 3)
    assert nojac.geometry_buffer is None and nojac.jacobian_terms_buffer.shape == (4, 18, 10)
    assert jac.transfer_bytes == jac.plan.input_bytes_jac
    assert nojac.transfer_bytes == nojac.plan.input_bytes_nojac
    assert list(jac.exec_params) == [2, 18, 18, 192, 2, 1, jac.plan.elems_per_work_group, 4]


@pytest.mark.parametrize("variant", [KernelVariant.REG_JAC, KernelVariant.SHM_NOJAC])
def test_inverted_element(device, mesh, materials, variant) -> None:
    """The inverted element is named whether the device or the host computes Jacobians."""

    broken = list(mesh)
    broken[2] = invert_element(mesh[2])
    with pytest.raises(InvertedElementError) as info:
        run_batch(variant, device, 1, broken, materials)
    assert info.value.details["element_id"] == 2


def test_multiple_invocations(device, mesh, materials) -> None:
    """A small allocation limit splits the mesh; results equal the single-invocation run."""

    small = replace(device, max_alloc_bytes=3 * 18 * 18 * 4)
    split = run_batch_detailed(KernelVariant.REG_JAC, small, 1, mesh, materials,
                               keep_outputs=True)
    single = run_batch_detailed(KernelVariant.REG_JAC, device, 1, mesh, materials)
    assert [plan.elems_per_kernel for plan in split.plans] == [3, 1]
    assert len(split.outputs) == 2
    assert split.flops.total == single.flops.total
    for a, b in zip(split.stiffness, single.stiffness):
        np.testing.assert_array_equal(a.data, b.data)
    assert set(split.timings) == {"input_preparation", "buffer_initialization",
                                  "input_transfer", "kernel_compute", "output_conversion"}
    assert split.transfer_bytes == sum(
        plan.input_bytes_jac for plan in split.plans)


def test_invocation_ranges(device) -> None:
    plan = plan_execution(device, 5, KernelVariant.REG_JAC)
    assert invocation_ranges(plan, 1500) == [(0, 672), (672, 1344), (1344, 1500)]


def test_run_batch_rejects(device, mesh, materials) -> None:
    with pytest.raises(ConfigurationError):
        run_batch(KernelVariant.REG_JAC, device, 1, [], MaterialField(()))
    with pytest.raises(ConfigurationError):
        run_batch(KernelVariant.REG_JAC, device, 1, mesh, materials.subset(0, 2))


def test_dump_buffers(tmp_path, device, mesh, materials) -> None:
    """Flat float32 files plus a manifest describing them."""

    inputs = _inputs(device, KernelVariant.REG_NOJAC, 1, mesh, materials)
    output = run_kernel(KernelVariant.REG_NOJAC, inputs)
    dump_buffers(str(tmp_path), inputs, output)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["variant"] == "REG_NOJAC"
    assert manifest["precision"] == "f32"
    assert set(manifest["buffers"]) == {"shape_table", "quadrature", "coefficients",
                                        "jacobian_terms", "stiffness"}
    stiffness = manifest["buffers"]["stiffness"]
    assert stiffness["shape"] == [4, 18, 18]
    assert (tmp_path / "stiffness.f32").stat().st_size == stiffness["bytes"] == 4 * 18 * 18 * 4


@pytest.mark.slow
@pytest.mark.parametrize("variant", [KernelVariant.REG_JAC, KernelVariant.SHM_NOJAC])
def test_high_order_against_oracle(device, mesh, materials, variant) -> None:
    """Order 7 matrices on two elements stay within the single-precision tolerance."""

    oracle = integrate_mesh(mesh[:2], materials.subset(0, 2), 7, method="generic", workers=2)
    result = run_batch(variant, device, 7, mesh[:2], materials.subset(0, 2))
    errors = [kernel.relative_error(ref) for kernel, ref in zip(result, oracle)]
    assert max(errors) < 5e-5, f"Got {errors}"
