"""
vulcan_fem/cli.py

Entry point of the ``vulcan-fem`` command with the subcommands ``verify``, ``plan`` and ``bench``.

Errors raised by vulcan_fem never escape as tracebacks: they are logged, printed to stderr as
``{"error": <code>, "message": ..., "details": {...}}`` and mapped to the error's exit code.
"""

import argparse
import json
import os
import sys
from typing import Callable, Dict, List, Optional

from . import harness
from .config import OPTION_KEYS, RunConfig
from .encoder import Encoder
from .errors import VulcanFemError
from .logger import get_logger, set_level

logger = get_logger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
DEFAULT_LOG_LEVEL = "INFO"

COMMANDS: Dict[str, Callable] = {
    "verify": harness.cli_verify,
    "plan": harness.cli_plan,
    "bench": harness.cli_bench,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with option defaults; keys mirror the flags")
    parser.add_argument("--profile", help="device profile path or packaged name (gtx580, hd5870)")
    parser.add_argument("--p", help="approximation order(s): 5, 2..5 or 2,4")
    parser.add_argument("--variant",
                        help="reg-jac, reg-nojac, shm-jac, shm-nojac, a comma list or all")
    parser.add_argument("--precision", choices=("f32", "f64"))
    parser.add_argument("--occupancy", type=int, help="work-groups per compute unit")
    parser.add_argument("--wg", type=int, help="work-group size override")
    parser.add_argument("--json", help="write the JSON report here")
    parser.add_argument("--check-tables", action="store_true", default=None,
                        help="compare the planner with the profile's published tables")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS)


def _add_mesh(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mesh", help="cells per axis nx,ny,nz (two prisms per cell)")
    parser.add_argument("--distortion", type=float, help="interior vertex perturbation in [0, 0.3)")
    parser.add_argument("--seed", type=int, help="mesh perturbation seed")
    parser.add_argument("--material", help="global material E,nu")
    parser.add_argument("--workers", type=int, help="worker-pool width (default: all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vulcan-fem",
        description="Prism finite element integration on an emulated GPU: verification, "
                    "execution planning and benchmarks.")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="run the verification suites")
    _add_common(verify)
    _add_mesh(verify)
    verify.add_argument("--inject-inverted", type=int, metavar="INDEX",
                        help="turn this mesh element inside out")

    plan = commands.add_parser("plan", help="print execution plans")
    _add_common(plan)
    plan.add_argument("--elements", type=int, help="elements to integrate")

    bench = commands.add_parser("bench", help="time the kernel variants")
    _add_common(bench)
    _add_mesh(bench)
    bench.add_argument("--repetitions", type=int, help="timed repetitions, median reported")
    bench.add_argument("--warmup", type=int, help="untimed runs before the timed ones")
    bench.add_argument("--csv", help="write one row per (variant, p) here")
    bench.add_argument("--long-csv", help="write the plot-ready long format here")
    bench.add_argument("--dump-buffers", metavar="DIR",
                       help="write the first invocation's buffers of every run here")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one command.

    Returns:
        int: 0 on success, otherwise the exit code of the raised error.
    """

    args = build_parser().parse_args(argv)
    set_level(args.log_level or os.environ.get("VULCAN_LOG_LEVEL") or DEFAULT_LOG_LEVEL)
    options = {key: value for key, value in vars(args).items() if key in OPTION_KEYS}
    try:
        cfg = RunConfig.from_options(args.command, options, args.config)
        COMMANDS[args.command](cfg)
    except VulcanFemError as e:
        error = e
    else:
        return 0
    logger.error(f"{args.command} failed with {error.code}: {error.message}")
    print(json.dumps(error.to_dict(), cls=Encoder), file=sys.stderr)
    return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
