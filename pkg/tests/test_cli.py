# tests/test_cli.py
import json

import pytest

from vulcan_fem.cli import build_parser, main


@pytest.fixture(autouse=True)
def _restore_log_level(monkeypatch):
    """main() sets VULCAN_LOG_LEVEL; restore it after each test."""

    monkeypatch.setenv("VULCAN_LOG_LEVEL", "WARNING")


def _error_payload(err: str) -> dict:
    lines = [line for line in err.strip().splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def test_parser_subcommands() -> None:
    args = build_parser().parse_args(["bench", "--p", "2..3", "--repetitions", "3",
                                      "--long-csv", "out.csv"])
    assert (args.command, args.p, args.repetitions, args.long_csv) == ("bench", "2..3", 3, "out.csv")
    assert args.check_tables is None


def test_parser_rejects_unknown_precision() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args(["bench", "--precision", "f16"])


def test_plan_command(capsys) -> None:
    assert main(["plan", "--p", "5", "--variant", "reg-jac", "--log-level", "error"]) == 0
    out = capsys.readouterr().out
    assert "REG_JAC" in out and '"n_parts": 32' in out


def test_plan_check_tables(tmp_path) -> None:
    path = tmp_path / "plan.json"
    assert main(["plan", "--profile", "hd5870", "--check-tables", "--json", str(path)]) == 0
    document = json.loads(path.read_text())
    assert len(document["plans"]) == 24
    assert len(document["table_checks"]) == 36


def test_verify_tables_only(capsys) -> None:
    assert main(["verify", "--check-tables"]) == 0
    assert "planner_tables" in capsys.readouterr().out


def test_configuration_error_exit_code(capsys) -> None:
    """Invalid options exit with 2 and a JSON error on stderr."""

    assert main(["plan", "--wg", "100"]) == 2
    payload = _error_payload(capsys.readouterr().err)
    assert payload["error"] == "CONFIGURATION_ERROR"


def test_inverted_element_exit_code(capsys) -> None:
    """An inverted element stops verification with exit code 4 naming the element."""

    code = main(["verify", "--p", "1", "--mesh", "1,1,1", "--variant", "reg-jac",
                 "--inject-inverted", "1"])
    assert code == 4
    payload = _error_payload(capsys.readouterr().err)
    assert payload["error"] == "INVERTED_ELEMENT"
    assert payload["details"]["element_id"] == 1
    assert len(payload["details"]["xi"]) == 3


def test_config_file(tmp_path, capsys) -> None:
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"p": 3, "variant": "shm-jac", "elements": 10}))
    assert main(["plan", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert '"elems_per_kernel": 10' in out and "SHM_JAC" in out


def test_bench_command(tmp_path) -> None:
    csv = tmp_path / "bench.csv"
    code = main(["bench", "--p", "1", "--mesh", "1,1,1", "--variant", "shm-jac",
                 "--repetitions", "1", "--warmup", "0", "--csv", str(csv)])
    assert code == 0
    assert csv.read_text().splitlines()[0].startswith("variant,p,device,elements,precision")


def test_malformed_config_exit_code(tmp_path, capsys) -> None:
    """A malformed material in the config file exits with 2 and a JSON error."""

    config = tmp_path / "run.json"
    config.write_text(json.dumps({"material": 5}))
    assert main(["plan", "--config", str(config)]) == 2
    payload = _error_payload(capsys.readouterr().err)
    assert payload["error"] == "CONFIGURATION_ERROR"
