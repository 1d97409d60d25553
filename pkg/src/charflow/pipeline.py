"""Run orchestration used by the CLI: load, solve, check, write artifacts.

Library errors propagate to :func:`charflow.cli.main`, which maps them to
exit codes. Failures that still leave useful artifacts (a truncated C-
characteristic, a Picard iteration that never converges) write their manifest first.
"""

from __future__ import annotations

import logging
import os
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from charflow.errors import EpsilonGuardHit, InsufficientIterations, NoConvergence
from charflow.fs.exports import resolve_out_dir, safe_write_text
from charflow.logs.rotating import get_logger, log_path
from charflow.report.csv_writer import (
    write_characteristic_data,
    write_grid_fields,
    write_physical,
    write_raster,
)
from charflow.report.manifest import Manifest, dumps, write_run_info
from charflow.report.plot_data import write_plot_data
from charflow.scenario import Scenario, load_scenario
from charflow.solver.constraints import CharacteristicData, corner_compatibility
from charflow.solver.hodograph import jacobian_field
from charflow.stages import (
    Characteristics,
    Solution,
    require_depth,
    solve_characteristics,
    solve_oracle,
    solve_scenario,
)
from charflow.verify.bounds import bound_checks
from charflow.verify.contraction import contraction_report
from charflow.verify.convergence import convergence_study
from charflow.verify.euler import euler_residuals
from charflow.verify.residuals import residual_suite
from charflow.workers.pool import resolve_threads

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GUARD = 2
EXIT_NO_CONVERGENCE = 3

_ENV_TRACE = "CHARFLOW_TRACE"
_EULER_CONSTANT = 50.0


@dataclass(slots=True)
class RunOptions:
    """Configuration for one CLI command."""

    command: str
    config: str
    out_dir: Optional[Path] = None
    threads: Optional[int] = None
    tol: Optional[float] = None
    grid: Optional[Tuple[int, int]] = None
    levels: int = 3
    reps: int = 3
    log_file: Optional[Path] = None
    trace: bool = False


@dataclass(slots=True)
class RunResult:
    """Outcome of one CLI command."""

    exit_code: int
    out_dir: Path
    manifest_path: Optional[Path]
    receipts: List[str]
    files: List[Path] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    log_file: Optional[Path] = None


@dataclass(slots=True)
class _Run:
    options: RunOptions
    scenario: Scenario
    out_dir: Path
    threads: int
    log_file: Path
    receipts: List[str] = field(default_factory=list)
    files: List[Path] = field(default_factory=list)

    def manifest(self) -> Manifest:
        return Manifest(command=self.options.command, scenario=self.scenario.describe())

    def finish(self, manifest: Manifest, exit_code: int, receipt: str) -> RunResult:
        manifest.exit_code = exit_code
        manifest_path = manifest.write(self.out_dir)
        self.files.append(manifest_path)
        self.files.append(
            write_run_info(self.out_dir, command=self.options.command, log_file=self.log_file, threads=self.threads)
        )
        self.receipts.append(receipt)
        self.receipts.append(f"OUT_DIR path={self.out_dir}")
        LOGGER.info("Run %s completed exit_code=%s out=%s", self.options.command, exit_code, self.out_dir)
        return RunResult(
            exit_code=exit_code,
            out_dir=self.out_dir,
            manifest_path=manifest_path,
            receipts=list(self.receipts),
            files=list(self.files),
            log_file=self.log_file,
        )


def _start(options: RunOptions) -> _Run:
    scenario = load_scenario(options.config).with_overrides(
        tol=options.tol,
        grid=options.grid,
        out_dir=options.out_dir,
    )
    out_dir = resolve_out_dir(scenario.out_dir, scenario.name).resolve()
    log_file = (options.log_file or out_dir / "run.log").expanduser().resolve()
    trace = options.trace or os.getenv(_ENV_TRACE, "").strip() == "1"
    base_logger = _configure_logging(log_file, trace=trace)
    threads = resolve_threads(options.threads)
    LOGGER.info("Run %s start: scenario %s (%s)", options.command, scenario.name, scenario.source or "inline")
    if trace:
        base_logger.debug("Trace mode enabled.")
    run = _Run(options=options, scenario=scenario, out_dir=out_dir, threads=threads, log_file=log_file)
    run.receipts.append(f"LOG_ROTATION_OK path={log_path()}")
    return run


def _configure_logging(log_file: Path, *, trace: bool = False) -> logging.Logger:
    log_file.parent.mkdir(parents=True, exist_ok=True)
    base_logger = get_logger()
    level = logging.DEBUG if trace else logging.INFO
    base_logger.setLevel(level)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    if not any(
        isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler)
        for handler in root_logger.handlers
    ):
        stream_handler = logging.StreamHandler()
        stream_handler.setLevel(level if trace else logging.WARNING)
        root_logger.addHandler(stream_handler)

    existing_paths = {
        getattr(handler, "baseFilename", None)
        for handler in base_logger.handlers
        if hasattr(handler, "baseFilename")
    }
    if str(log_file) not in existing_paths:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(level)
        formatter = logging.Formatter(
            "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            "%Y-%m-%d %H:%M:%S",
        )
        file_handler.setFormatter(formatter)
        base_logger.addHandler(file_handler)

    return base_logger


# --- manifest sections -------------------------------------------------------


def _constraint_section(cd: CharacteristicData) -> Dict[str, object]:
    return {
        "samples": cd.n,
        "param_end": float(cd.param[-1]),
        "truncated": cd.truncated,
        "u_bar": cd.u_bar,
        "u_cross": cd.u_cross,
        "r_guard": cd.r_guard,
        "diagnostics": dict(cd.diagnostics),
    }


def _characteristics_section(chars: Characteristics) -> Dict[str, object]:
    ok, mismatch = corner_compatibility(chars.raw_cp, chars.raw_cm, eos=chars.eos, geometry=chars.geometry)
    return {
        "cplus": _constraint_section(chars.raw_cp),
        "cminus": _constraint_section(chars.raw_cm),
        "corner_compatible": ok,
        "corner_mismatch": mismatch,
    }


def _solution_sections(manifest: Manifest, solution: Solution) -> None:
    spec = solution.spec
    manifest.add(
        "grid",
        {"nu": spec.nu, "nv": spec.nv, "h": spec.h, "v_star": spec.v_star, "du": spec.du, "dv": spec.dv},
    )
    estimate = solution.estimate.summary() if solution.estimate is not None else None
    manifest.add("estimate", estimate)
    manifest.add("segments", solution.segments)
    manifest.add("iterations", solution.iterations)
    manifest.add("traces", [trace.as_dict() for trace in solution.traces])
    manifest.add("notes", list(solution.notes))
    physical = solution.physical
    if physical is not None:
        manifest.add(
            "physical",
            {
                "valid_nodes": physical.valid_count,
                "nodes": int(physical.valid.size),
                "raster": None
                if physical.raster is None
                else {"nt": physical.raster.t_axis.size, "nr": physical.raster.r_axis.size},
            },
        )


def _write_solution(run: _Run, solution: Solution) -> None:
    chars = solution.characteristics
    run.files.append(write_characteristic_data(chars.raw_cp, chars.raw_cm, run.out_dir))
    run.files.extend(write_grid_fields(solution.grid, run.out_dir))
    run.files.extend(write_plot_data(solution.grid, run.out_dir))
    if solution.physical is not None:
        run.files.append(write_physical(solution.physical, run.out_dir))
        if solution.physical.raster is not None:
            run.files.append(write_raster(solution.physical.raster, run.out_dir))


def _solve_or_record(run: _Run, manifest: Manifest, chars: Characteristics) -> Solution:
    """Solve the strip; on a guard hit or no convergence, write the manifest and re-raise."""
    try:
        return solve_scenario(run.scenario, run.threads, chars=chars)
    except EpsilonGuardHit as exc:
        manifest.add("error", {"kind": "EpsilonGuardHit", "message": str(exc), "u_bar": exc.u_bar})
        run.files.append(write_characteristic_data(chars.raw_cp, chars.raw_cm, run.out_dir))
        run.finish(manifest, EXIT_GUARD, f"SOLVE_TRUNCATED u_bar={exc.u_bar!r}")
        raise
    except NoConvergence as exc:
        trace = getattr(exc, "trace", None)
        manifest.add(
            "error",
            {
                "kind": "NoConvergence",
                "message": str(exc),
                "segment": exc.segment,
                "max_iter": exc.max_iter,
                "last_norms": dict(exc.last_norms),
                "trace": trace.as_dict() if trace is not None else None,
            },
        )
        run.finish(manifest, EXIT_NO_CONVERGENCE, f"SOLVE_NO_CONVERGENCE max_iter={exc.max_iter}")
        raise


# --- commands -----------------------------------------------------------------


def run_constraints(options: RunOptions) -> RunResult:
    """Solve both constraint systems and write the characteristic data."""
    run = _start(options)
    manifest = run.manifest()
    chars = solve_characteristics(run.scenario, run.threads)
    run.files.append(write_characteristic_data(chars.raw_cp, chars.raw_cm, run.out_dir))
    manifest.add("constraints", _characteristics_section(chars))
    if chars.raw_cm.truncated:
        LOGGER.warning("C- data truncated at u=%s", chars.raw_cm.u_bar)
        return run.finish(manifest, EXIT_GUARD, f"CONSTRAINTS_TRUNCATED u_bar={chars.raw_cm.u_bar!r}")
    return run.finish(manifest, EXIT_OK, f"CONSTRAINTS_OK samples={chars.raw_cp.n}+{chars.raw_cm.n}")


def run_solve(options: RunOptions) -> RunResult:
    """Full pipeline with field output and a residual summary."""
    run = _start(options)
    manifest = run.manifest()
    chars = solve_characteristics(run.scenario, run.threads)
    manifest.add("constraints", _characteristics_section(chars))
    solution = _solve_or_record(run, manifest, chars)
    _write_solution(run, solution)
    _solution_sections(manifest, solution)
    residuals = residual_suite(
        solution.grid, chars.cp, chars.cm, chars.eos, chars.geometry, run.scenario.checks.thresholds
    )
    manifest.add("residuals", residuals.as_dict())
    receipt = f"SOLVE_OK iterations={solution.iterations} segments={solution.segments} grid={solution.spec.label()}"
    return run.finish(manifest, EXIT_OK, receipt)


def run_verify(options: RunOptions) -> RunResult:
    """Solve, then run every enabled check; exit 0 only when all pass."""
    run = _start(options)
    manifest = run.manifest()
    checks = run.scenario.checks
    chars = solve_characteristics(run.scenario, run.threads)
    manifest.add("constraints", _characteristics_section(chars))
    solution = _solve_or_record(run, manifest, chars)
    _write_solution(run, solution)
    _solution_sections(manifest, solution)
    grid = solution.grid
    failed: List[str] = []

    if checks.residuals:
        residuals = residual_suite(grid, chars.cp, chars.cm, chars.eos, chars.geometry, checks.thresholds)
        manifest.add("residuals", residuals.as_dict())
        failed.extend(f"residual:{name}" for name in residuals.failures())
        manifest.add("jacobian", {"mismatch": jacobian_field(grid, chars.eos).mismatch(grid.valid)})

    if checks.bounds:
        if solution.estimate is None:
            manifest.add("bounds", None)
        else:
            bounds = bound_checks(chars.cp, chars.cm, solution.estimate, grid, chars.eos, chars.geometry)
            manifest.add("bounds", bounds.as_dict())
            if not bounds.passed:
                failed.extend(f"bound:{name}" for name in bounds.violations())

    if checks.contraction:
        reports: List[Optional[Dict[str, object]]] = []
        for trace in solution.traces:
            try:
                report = contraction_report(trace)
            except InsufficientIterations as exc:
                LOGGER.info("Contraction check skipped for segment %s: %s", trace.segment, exc)
                reports.append(None)
                continue
            reports.append(report.as_dict())
            if report.flagged:
                failed.append(f"contraction:{trace.segment}")
        manifest.add("contraction", reports)

    if checks.euler and solution.physical is not None:
        euler = euler_residuals(grid, solution.physical, chars.eos, chars.geometry)
        spacing = max(grid.du, grid.dv)
        limit = checks.thresholds.get("euler", _EULER_CONSTANT) * spacing
        section = euler.as_dict()
        section["threshold"] = limit
        if euler.node_sup > limit:
            failed.append("euler")
        raster = solution.physical.raster
        if raster is not None and euler.raster_sup is not None:
            raster_limit = checks.thresholds.get("euler_raster", _EULER_CONSTANT) * max(spacing, raster.dt, raster.dr)
            section["raster_threshold"] = raster_limit
            if euler.raster_sup > raster_limit:
                failed.append("euler_raster")
        manifest.add("euler", section)

    manifest.add("failed_checks", failed)
    if failed:
        LOGGER.warning("Verification failed: %s", ", ".join(failed))
        return run.finish(manifest, EXIT_ERROR, f"VERIFY_FAIL checks={','.join(failed)}")
    return run.finish(manifest, EXIT_OK, f"VERIFY_OK iterations={solution.iterations}")


def run_convergence(options: RunOptions) -> RunResult:
    run = _start(options)
    manifest = run.manifest()
    study = convergence_study(run.scenario, options.levels, threads=run.threads)
    manifest.add("convergence", study.as_dict())
    summary = ",".join(
        f"{name}={'exact' if result.exact else format(result.order or float('nan'), '.2f')}"
        for name, result in study.families.items()
    )
    if not study.passed:
        return run.finish(manifest, EXIT_ERROR, f"CONVERGENCE_FAIL levels={options.levels} {summary}")
    return run.finish(manifest, EXIT_OK, f"CONVERGENCE_OK levels={options.levels} {summary}")


def _timings(fn: Callable[[], object], reps: int) -> Dict[str, float]:
    samples: List[float] = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return {
        "min": min(samples),
        "median": statistics.median(samples),
        "mean": statistics.fmean(samples),
        "reps": reps,
    }


def run_bench(options: RunOptions) -> RunResult:
    """Wall-clock statistics for the Picard and marching solvers on two grids."""
    if options.reps < 1:
        raise ValueError(f"--reps must be at least 1, got {options.reps}")
    run = _start(options)
    manifest = run.manifest()
    results: List[Dict[str, object]] = []
    for level in range(2):
        scenario = run.scenario.refined(level)
        chars = solve_characteristics(scenario, run.threads)
        spec = scenario.grid_spec()
        require_depth(chars, spec)
        picard = _timings(lambda: solve_scenario(scenario, run.threads, chars=chars, with_physical=False), options.reps)
        marching = _timings(lambda: solve_oracle(chars, spec), options.reps)
        LOGGER.info(
            "Bench %s: picard median %.4fs, marching median %.4fs", spec.label(), picard["median"], marching["median"]
        )
        results.append({"grid": spec.label(), "picard": picard, "marching": marching})
    manifest.add("bench", results)
    run.files.append(safe_write_text(run.out_dir / "bench.json", dumps({"bench": results})))
    return run.finish(manifest, EXIT_OK, f"BENCH_OK reps={options.reps} grids={len(results)}")


COMMANDS: Dict[str, Callable[[RunOptions], RunResult]] = {
    "constraints": run_constraints,
    "solve": run_solve,
    "verify": run_verify,
    "convergence": run_convergence,
    "bench": run_bench,
}


def execute(options: RunOptions) -> RunResult:
    return COMMANDS[options.command](options)


__all__ = [
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_GUARD",
    "EXIT_NO_CONVERGENCE",
    "RunOptions",
    "RunResult",
    "COMMANDS",
    "execute",
    "run_constraints",
    "run_solve",
    "run_verify",
    "run_convergence",
    "run_bench",
]
