# tests/test_harness.py
import io
import json
from unittest.mock import patch

import pandas as pd
import pytest

from vulcan_fem.buffers import read_json, write_json
from vulcan_fem.config import RunConfig
from vulcan_fem.errors import ContractViolationError, VerificationFailedError
from vulcan_fem.harness import (BENCH_SCHEMA, CSV_COLUMNS, VERIFY_SCHEMA, cli_bench, cli_plan,
                                cli_verify, validate_report)
from vulcan_fem.kernels import flop_model
from vulcan_fem.planner import KernelVariant, load_device_profile, plan_execution, profile_path
from vulcan_fem.verification import CheckResult, VerifyReport


def _bench_config(tmp_path, **extra):
    options = {"p": "1", "mesh": "1,1,1", "variant": "reg-jac,shm-nojac", "repetitions": 1,
               "warmup": 0, "workers": 2}
    options.update(extra)
    return RunConfig.from_options("bench", options)


def test_cli_plan_json(tmp_path) -> None:
    """The plan table is printed and the JSON document carries memory items and flops."""

    path = tmp_path / "plan.json"
    cfg = RunConfig.from_options("plan", {"p": "5", "variant": "reg-jac", "json": str(path)})
    out = io.StringIO()
    assert cli_plan(cfg, out) == 0
    assert "REG_JAC" in out.getvalue()
    document = read_json(str(path))
    assert document["command"] == "plan" and document["device"] == "gtx580"
    record = document["plans"][0]
    assert (record["n_parts"], record["elems_per_kernel"], record["output_mb"]) == (32, 672, 366.28)
    plan = plan_execution(load_device_profile("gtx580"), 5, KernelVariant.REG_JAC)
    assert record["flops_per_element"] == flop_model(KernelVariant.REG_JAC, plan)
    assert record["memory_bytes"]["output"] == 384072192
    assert record["jacobian_flops"] == {"per_point_counted": 150, "per_point_published": 37,
                                        "counted": 32 * 150 * 150, "published": 32 * 150 * 37}
    assert "366.28 MB" in out.getvalue()
    assert "37 published" in out.getvalue()


def test_cli_plan_default_stream(capsys) -> None:
    """Without an explicit stream the command writes to the current stdout."""

    cfg = RunConfig.from_options("plan", {"p": "2", "variant": "shm-nojac"})
    assert cli_plan(cfg) == 0
    assert "SHM_NOJAC" in capsys.readouterr().out


def test_cli_plan_elements() -> None:
    cfg = RunConfig.from_options("plan", {"p": "3", "variant": "shm-jac", "elements": 100})
    out = io.StringIO()
    cli_plan(cfg, out)
    assert '"elems_per_kernel": 100' in out.getvalue()


def test_cli_plan_check_tables_failure(tmp_path) -> None:
    """A published value the planner does not reproduce fails the command."""

    document = read_json(profile_path("gtx580"))
    document["reference"]["rows"]["reg_parts"]["5"] = 31
    path = tmp_path / "altered.json"
    write_json(str(path), document)
    cfg = RunConfig.from_options("plan", {"profile": str(path), "p": "5", "check_tables": True})
    with pytest.raises(VerificationFailedError) as info:
        cli_plan(cfg, io.StringIO())
    assert info.value.details["failed"] == ["reg_parts/p=5"]


def test_cli_verify_report(tmp_path) -> None:
    path = tmp_path / "verify.json"
    cfg = RunConfig.from_options("verify", {"p": "1", "mesh": "1,1,1", "variant": "reg-nojac",
                                            "json": str(path)})
    out = io.StringIO()
    assert cli_verify(cfg, out) == 0
    document = read_json(str(path))
    assert document["passed"] and document["n_failed"] == 0
    assert "checks passed" in out.getvalue()


def test_cli_verify_failure() -> None:
    """Failed checks are listed in the raised error."""

    report = VerifyReport("gtx580", (2,), ("reg-jac",), "f32", 2,
                          [CheckResult("kernel", "coverage", 2, 1.0, 0.0, False)])
    cfg = RunConfig.from_options("verify", {"p": "2", "mesh": "1,1,1"})
    with patch("vulcan_fem.harness.run_verification", return_value=report):
        with pytest.raises(VerificationFailedError) as info:
            cli_verify(cfg, io.StringIO())
    assert info.value.details["failed"] == ["kernel/coverage/p=2"]


def test_cli_bench_reports(tmp_path) -> None:
    """Rows per variant plus the CPU reference, in CSV, long CSV and JSON."""

    cfg = _bench_config(tmp_path, csv=str(tmp_path / "out" / "bench.csv"),
                        long_csv=str(tmp_path / "out" / "bench_long.csv"),
                        json=str(tmp_path / "bench.json"), dump_buffers=str(tmp_path / "dump"))
    report = cli_bench(cfg, io.StringIO())
    assert [row["variant"] for row in report.rows] == ["reg-jac", "shm-nojac", "cpu-ref"]

    frame = pd.read_csv(tmp_path / "out" / "bench.csv")
    assert list(frame.columns) == list(CSV_COLUMNS)
    assert len(frame) == 3
    long_frame = pd.read_csv(tmp_path / "out" / "bench_long.csv")
    assert len(long_frame) == 3 * (len(CSV_COLUMNS) - 5)
    assert set(long_frame.columns) == {"variant", "p", "device", "elements", "precision",
                                       "metric", "value"}
    assert read_json(str(tmp_path / "bench.json"))["command"] == "bench"
    assert (tmp_path / "dump" / "reg-jac-p1" / "manifest.json").exists()


def test_bench_row_identities(tmp_path) -> None:
    """Throughput, totals and flop counts follow from the measured quantities."""

    report = cli_bench(_bench_config(tmp_path), io.StringIO())
    plan = plan_execution(load_device_profile("gtx580"), 1, KernelVariant.REG_JAC, 2)
    row = report.rows[0]
    assert row["flops"] == 2 * flop_model(KernelVariant.REG_JAC, plan)
    assert row["flops_per_element"] == row["flops"] / 2
    if row["gflops"] is not None:
        assert row["gflops"] == pytest.approx(row["flops"] / row["kernel_compute_s"] / 1e9)
    phases = [row[f"{phase}_s"] for phase in ("input_preparation", "buffer_initialization",
                                               "input_transfer", "kernel_compute",
                                               "output_conversion")]
    assert row["total_s"] == pytest.approx(sum(phases))
    assert row["input_bytes"] == row["input_jac_bytes"]
    assert row["arithmetic_intensity"] == pytest.approx(
        row["flops"] / (row["input_bytes"] + row["output_bytes"]))
    cpu = report.rows[-1]
    assert cpu["precision"] == "f64" and cpu["arithmetic_intensity"] is None


@pytest.mark.parametrize("schema", [VERIFY_SCHEMA, BENCH_SCHEMA])
def test_validate_report_rejects(schema) -> None:
    with pytest.raises(ContractViolationError):
        validate_report({"command": "other"}, schema)


def test_validate_report_encodes() -> None:
    report = VerifyReport("gtx580", (2,), ("reg-jac",), "f32", 2,
                          [CheckResult("sizing", "n_shape", 2, 0.0, 0.0, True)])
    document = validate_report(report.as_dict(), VERIFY_SCHEMA)
    assert json.loads(json.dumps(document))["checks"][0]["name"] == "n_shape"
