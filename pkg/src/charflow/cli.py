"""Command-line entry point for charflow."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from charflow import __version__
from charflow.errors import EpsilonGuardHit, NoConvergence
from charflow.pipeline import (
    COMMANDS,
    EXIT_ERROR,
    EXIT_GUARD,
    EXIT_NO_CONVERGENCE,
    RunOptions,
    RunResult,
    execute,
)
from charflow.scenario import parse_grid


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        required=True,
        help="Scenario TOML file, or the name of a bundled scenario (e.g. 'static').",
    )
    common.add_argument("--out", dest="out_dir", help="Output directory (default: runs/<scenario>).")
    common.add_argument(
        "--threads",
        type=int,
        help="Worker cap for the solvers (default: CHARFLOW_THREADS or 1).",
    )
    common.add_argument("--tol", type=float, help="Override the Picard tolerance.")
    common.add_argument("--grid", help="Override the cell counts as NUxNV, e.g. 64x128.")
    common.add_argument("--log-file", dest="log_file", help="Explicit per-run log file path.")
    common.add_argument(
        "--trace",
        action="store_true",
        help="Log at DEBUG level, including per-iteration Picard norms.",
    )

    parser = argparse.ArgumentParser(
        prog="charflow",
        description="Characteristic initial value solver for spherically symmetric barotropic flow",
    )
    parser.add_argument("--version", action="version", version=f"charflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constraints", parents=[common], help="Solve the constraint ODEs on both characteristics.")
    sub.add_parser("solve", parents=[common], help="Solve the strip and map it to the t-r plane.")
    sub.add_parser("verify", parents=[common], help="Solve and run every enabled check.")
    convergence = sub.add_parser("convergence", parents=[common], help="Refinement study with fitted orders.")
    convergence.add_argument("--levels", type=int, default=3, help="Number of grid levels (>= 3).")
    bench = sub.add_parser("bench", parents=[common], help="Time the Picard and marching solvers.")
    bench.add_argument("--reps", type=int, default=3, help="Repetitions per solver and grid.")
    return parser


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def create_run_options(args: argparse.Namespace) -> RunOptions:
    """Return ``RunOptions`` derived from parsed ``args``."""

    if args.command not in COMMANDS:
        raise ValueError(f"unknown command {args.command!r}")
    if args.threads is not None and args.threads < 1:
        raise ValueError("--threads must be a positive integer")
    return RunOptions(
        command=args.command,
        config=args.config,
        out_dir=Path(args.out_dir).expanduser() if args.out_dir else None,
        threads=args.threads,
        tol=args.tol,
        grid=parse_grid(args.grid) if args.grid else None,
        levels=getattr(args, "levels", 3),
        reps=getattr(args, "reps", 3),
        log_file=Path(args.log_file).expanduser() if args.log_file else None,
        trace=bool(args.trace),
    )


def _print_result(result: RunResult) -> None:
    for line in result.receipts:
        print(line, flush=True)
    for warning in result.warnings:
        print(f"Warning: {warning}", file=sys.stderr, flush=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_arguments(argv)
    try:
        options = create_run_options(args)
        result = execute(options)
    except EpsilonGuardHit as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NoConvergence as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except Exception as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _print_result(result)
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())


__all__ = ["build_parser", "parse_arguments", "create_run_options", "main"]
