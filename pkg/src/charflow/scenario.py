"""Scenario files: TOML loading, validation, overrides and free-data sampling."""

from __future__ import annotations

import logging
import math
import tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from charflow._paths import scenario_path
from charflow.errors import ScenarioError
from charflow.physics.eos import EosModel, PolytropicEos, TabulatedEos
from charflow.physics.state import Geometry, GeometryMode
from charflow.solver.constraints import Corner, FreeData, Side
from charflow.solver.goursat import GridSpec, PicardSettings
from charflow.solver.hodograph import RasterSpec

LOGGER = logging.getLogger(__name__)

PROFILE_KINDS = ("constant", "sine", "linear", "samples", "csv")
CHECK_NAMES = ("residuals", "bounds", "contraction", "euler")


@dataclass(frozen=True, slots=True)
class EosSection:
    kind: str = "polytropic"
    gamma: float = 2.0
    kappa: float = 0.5
    rho_ref: Optional[float] = None
    rho_min: Optional[float] = None
    rho_max: Optional[float] = None
    table_path: Optional[Path] = None


@dataclass(frozen=True, slots=True)
class Profile:
    """A free invariant as a function of its characteristic parameter."""

    kind: str = "constant"
    value: float = 0.0
    base: float = 0.0
    amplitude: float = 0.0
    frequency: float = 1.0
    slope: float = 0.0
    values: Tuple[float, ...] = ()
    params: Tuple[float, ...] = ()
    path: Optional[Path] = None

    def sample(self, grid: np.ndarray, extent: float) -> np.ndarray:
        """Evaluate on ``grid``; sampled kinds are spread uniformly over ``[0, extent]``."""
        x = np.asarray(grid, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "sine":
            return self.base + self.amplitude * np.sin(self.frequency * x)
        if self.kind == "linear":
            return self.base + self.slope * x
        values = np.asarray(self.values, dtype=float)
        if self.params:
            knots = np.asarray(self.params, dtype=float)
        else:
            knots = np.linspace(0.0, extent, values.size)
        if knots.size == x.size and np.allclose(knots, x, rtol=0.0, atol=1e-12 * max(1.0, extent)):
            return values.copy()
        if values.size == 1:
            return np.full_like(x, values[0])
        return CubicSpline(knots, values)(x)


@dataclass(frozen=True, slots=True)
class DataSection:
    r0: float
    v_star: float
    u_star: float
    beta_plus: Profile
    alpha_minus: Profile
    alpha0: Optional[float] = None
    beta0: Optional[float] = None
    epsilon_guard: Optional[float] = None
    n_samples: Optional[int] = None

    @property
    def guard(self) -> float:
        return self.epsilon_guard if self.epsilon_guard is not None else 1e-3 * self.r0


@dataclass(frozen=True, slots=True)
class GridSection:
    nu: int = 32
    nv: int = 64
    h: Optional[float] = None


@dataclass(frozen=True, slots=True)
class SolverSection:
    tol: float = 1e-10
    max_iter: int = 60
    segments: int = 0
    l: float = 2.0
    inner_tol: Optional[float] = None
    inner_max_iter: int = 80


@dataclass(frozen=True, slots=True)
class RasterSection:
    nt: int = 0
    nr: int = 0


@dataclass(frozen=True, slots=True)
class ChecksSection:
    residuals: bool = True
    bounds: bool = True
    contraction: bool = True
    euler: bool = True
    thresholds: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class Scenario:
    name: str
    eos: EosSection
    geometry: GeometryMode
    data: DataSection
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    raster: RasterSection = field(default_factory=RasterSection)
    checks: ChecksSection = field(default_factory=ChecksSection)
    out_dir: Optional[Path] = None
    source: Optional[Path] = None

    # --- derived views ------------------------------------------------------

    @property
    def depth(self) -> float:
        return self.grid.h if self.grid.h is not None else self.data.u_star

    def grid_spec(self) -> GridSpec:
        return GridSpec(nu=self.grid.nu, nv=self.grid.nv, h=self.depth, v_star=self.data.v_star)

    def picard_settings(self, threads: int = 1) -> PicardSettings:
        return PicardSettings(
            tol=self.solver.tol,
            max_iter=self.solver.max_iter,
            inner_tol=self.solver.inner_tol,
            inner_max_iter=self.solver.inner_max_iter,
            threads=threads,
        )

    def raster_spec(self) -> Optional[RasterSpec]:
        if self.raster.nt <= 0 or self.raster.nr <= 0:
            return None
        return RasterSpec(nt=self.raster.nt, nr=self.raster.nr)

    def geometry_model(self) -> Geometry:
        return Geometry(self.geometry)

    @property
    def oversampling(self) -> int:
        """Constraint samples per solver cell along C+."""
        if self.data.n_samples is None:
            return 1
        return (self.data.n_samples - 1) // self.grid.nv

    def refined(self, level: int) -> "Scenario":
        """Copy with every cell count, raster included, multiplied by ``2**level``."""
        factor = 2**level
        samples = self.data.n_samples
        data = self.data if samples is None else replace(self.data, n_samples=(samples - 1) * factor + 1)
        grid = replace(self.grid, nu=self.grid.nu * factor, nv=self.grid.nv * factor)
        raster = self.raster
        if self.raster_spec() is not None:
            raster = replace(raster, nt=(raster.nt - 1) * factor + 1, nr=(raster.nr - 1) * factor + 1)
        return replace(self, grid=grid, data=data, raster=raster)

    def with_overrides(
        self,
        *,
        tol: Optional[float] = None,
        grid: Optional[Tuple[int, int]] = None,
        out_dir: Optional[Path] = None,
    ) -> "Scenario":
        updated = self
        if tol is not None:
            updated = replace(updated, solver=replace(updated.solver, tol=tol))
        if grid is not None:
            nu, nv = grid
            updated = replace(updated, grid=replace(updated.grid, nu=nu, nv=nv))
            if updated.data.n_samples is not None:
                updated = replace(updated, data=replace(updated.data, n_samples=None))
        if out_dir is not None:
            updated = replace(updated, out_dir=out_dir)
        problems = validate(updated)
        if problems:
            raise ScenarioError(f"invalid overrides for scenario {self.name}", problems=problems)
        return updated

    def describe(self) -> Dict[str, Any]:
        """Every resolved parameter, JSON-ready."""
        payload = asdict(self)
        payload["geometry"] = self.geometry.value
        payload["grid"]["h"] = self.depth
        payload["data"]["epsilon_guard"] = self.data.guard
        payload["checks"]["thresholds"] = dict(self.checks.thresholds)
        return _jsonable(payload)


_GRID_DEFAULTS = GridSection()
_SOLVER_DEFAULTS = SolverSection()

# --- building solver inputs -------------------------------------------------


def build_eos(section: EosSection) -> EosModel:
    if section.kind == "polytropic":
        kwargs: Dict[str, float] = {}
        if section.rho_min is not None:
            kwargs["rho_min"] = section.rho_min
        if section.rho_max is not None:
            kwargs["rho_max"] = section.rho_max
        if section.rho_ref is not None:
            kwargs["rho_ref"] = section.rho_ref
        return PolytropicEos(gamma=section.gamma, kappa=section.kappa, **kwargs)
    if section.table_path is None:
        raise ScenarioError("tabulated equation of state needs eos.table_path")
    return TabulatedEos.from_csv(
        section.table_path,
        rho_min=section.rho_min,
        rho_max=section.rho_max,
        rho_ref=section.rho_ref,
    )


def free_data(scenario: Scenario) -> Tuple[FreeData, FreeData]:
    """Sample both free invariants on the constraint grids.

    C+ spans ``[0, v*]`` with ``nv * oversampling`` cells; C- uses the same
    u-spacing as the solver grid (refined by the same factor) up to ``u*``.
    """

    data = scenario.data
    factor = scenario.oversampling
    dv = data.v_star / (scenario.grid.nv * factor)
    du = scenario.depth / (scenario.grid.nu * factor)
    v_grid = dv * np.arange(scenario.grid.nv * factor + 1)
    u_count = int(math.floor(data.u_star / du + 1e-9)) + 1
    u_grid = du * np.arange(u_count)

    beta_plus = data.beta_plus.sample(v_grid, data.v_star)
    alpha_minus = data.alpha_minus.sample(u_grid, data.u_star)
    alpha0 = float(alpha_minus[0]) if data.alpha0 is None else data.alpha0
    beta0 = float(beta_plus[0]) if data.beta0 is None else data.beta0
    corner = Corner(alpha0=alpha0, beta0=beta0, r0=data.r0)
    return (
        FreeData(side=Side.CPLUS, param_grid=v_grid, samples=beta_plus, corner=corner),
        FreeData(side=Side.CMINUS, param_grid=u_grid, samples=alpha_minus, corner=corner),
    )


# --- loading ----------------------------------------------------------------


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load and validate a scenario file, or a bundled scenario by name."""
    path = scenario_path(path_or_name)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    scenario = scenario_from_mapping(raw, base_dir=path.parent, name=path.stem)
    scenario = replace(scenario, source=path)
    LOGGER.info("Loaded scenario %s from %s", scenario.name, path)
    return scenario


def scenario_from_mapping(raw: Mapping[str, Any], *, base_dir: Path, name: str = "scenario") -> Scenario:
    problems: List[str] = []
    known = {"name", "eos", "geometry", "data", "grid", "solver", "raster", "output", "checks"}
    for key in raw:
        if key not in known:
            problems.append(f"unknown section [{key}]")

    eos_raw = dict(raw.get("eos", {}))
    table = eos_raw.get("table_path")
    eos = EosSection(
        kind=str(eos_raw.get("kind", "polytropic")),
        gamma=float(eos_raw.get("gamma", 2.0)),
        kappa=float(eos_raw.get("kappa", 0.5)),
        rho_ref=_opt_float(eos_raw.get("rho_ref")),
        rho_min=_opt_float(eos_raw.get("rho_min")),
        rho_max=_opt_float(eos_raw.get("rho_max")),
        table_path=_resolve(base_dir, table) if table else None,
    )

    mode_raw = str(raw.get("geometry", {}).get("mode", "spherical")).lower()
    try:
        geometry = GeometryMode(mode_raw)
    except ValueError:
        problems.append(f"geometry.mode must be spherical or plane, got {mode_raw!r}")
        geometry = GeometryMode.SPHERICAL

    data_raw = dict(raw.get("data", {}))
    for key in ("r0", "v_star", "u_star", "beta_plus", "alpha_minus"):
        if key not in data_raw:
            problems.append(f"data.{key} is required")
    data = DataSection(
        r0=float(data_raw.get("r0", 1.0)),
        v_star=float(data_raw.get("v_star", 1.0)),
        u_star=float(data_raw.get("u_star", 1.0)),
        beta_plus=_profile(data_raw.get("beta_plus", 0.0), base_dir, "data.beta_plus", problems),
        alpha_minus=_profile(data_raw.get("alpha_minus", 0.0), base_dir, "data.alpha_minus", problems),
        alpha0=_opt_float(data_raw.get("alpha0")),
        beta0=_opt_float(data_raw.get("beta0")),
        epsilon_guard=_opt_float(data_raw.get("epsilon_guard")),
        n_samples=_opt_int(data_raw.get("n_samples")),
    )

    grid_raw = dict(raw.get("grid", {}))
    grid = GridSection(
        nu=int(grid_raw.get("nu", _GRID_DEFAULTS.nu)),
        nv=int(grid_raw.get("nv", _GRID_DEFAULTS.nv)),
        h=_opt_float(grid_raw.get("h")),
    )
    solver_raw = dict(raw.get("solver", {}))
    solver = SolverSection(
        tol=float(solver_raw.get("tol", _SOLVER_DEFAULTS.tol)),
        max_iter=int(solver_raw.get("max_iter", _SOLVER_DEFAULTS.max_iter)),
        segments=int(solver_raw.get("segments", _SOLVER_DEFAULTS.segments)),
        l=float(solver_raw.get("l", _SOLVER_DEFAULTS.l)),
        inner_tol=_opt_float(solver_raw.get("inner_tol")),
        inner_max_iter=int(solver_raw.get("inner_max_iter", _SOLVER_DEFAULTS.inner_max_iter)),
    )
    raster_raw = dict(raw.get("raster", {}))
    raster = RasterSection(nt=int(raster_raw.get("nt", 0)), nr=int(raster_raw.get("nr", 0)))

    checks_raw = dict(raw.get("checks", {}))
    thresholds = {str(k): float(v) for k, v in dict(checks_raw.pop("thresholds", {})).items()}
    for key in checks_raw:
        if key not in CHECK_NAMES:
            problems.append(f"unknown check {key!r}")
    checks = ChecksSection(
        **{key: bool(checks_raw.get(key, True)) for key in CHECK_NAMES},
        thresholds=thresholds,
    )
    out = raw.get("output", {}).get("dir")

    scenario = Scenario(
        name=str(raw.get("name", name)),
        eos=eos,
        geometry=geometry,
        data=data,
        grid=grid,
        solver=solver,
        raster=raster,
        checks=checks,
        out_dir=_resolve(Path.cwd(), out) if out else None,
    )
    problems.extend(validate(scenario))
    if problems:
        raise ScenarioError(f"invalid scenario {scenario.name}", problems=problems)
    return scenario


def validate(scenario: Scenario) -> List[str]:
    """Return human-readable problems; an empty list means the scenario is usable."""
    problems: List[str] = []
    eos, data, grid, solver = scenario.eos, scenario.data, scenario.grid, scenario.solver
    if eos.kind not in ("polytropic", "tabulated"):
        problems.append(f"eos.kind must be polytropic or tabulated, got {eos.kind!r}")
    if eos.kind == "polytropic":
        if not eos.gamma > 1.0:
            problems.append(f"eos.gamma must exceed 1, got {eos.gamma}")
        if not eos.kappa > 0.0:
            problems.append(f"eos.kappa must be positive, got {eos.kappa}")
    if eos.kind == "tabulated":
        if eos.table_path is None:
            problems.append("eos.table_path is required for a tabulated equation of state")
        elif not eos.table_path.exists():
            problems.append(f"eos.table_path not found: {eos.table_path}")
    if not data.r0 > 0.0:
        problems.append(f"data.r0 must be positive, got {data.r0}")
    if not (data.v_star > 0.0 and data.u_star > 0.0):
        problems.append("data.v_star and data.u_star must be positive")
    if not 0.0 < data.guard < data.r0:
        problems.append(f"data.epsilon_guard must lie in (0, r0), got {data.guard}")
    for label, profile in (("beta_plus", data.beta_plus), ("alpha_minus", data.alpha_minus)):
        if profile.kind == "csv" and (profile.path is None or not profile.path.exists()):
            problems.append(f"data.{label} file not found: {profile.path}")
    if grid.nu < 2 or grid.nv < 2:
        problems.append(f"grid.nu and grid.nv must be at least 2, got {grid.nu}x{grid.nv}")
    if grid.h is not None and not 0.0 < grid.h <= data.u_star * (1 + 1e-12):
        problems.append(f"grid.h must lie in (0, u_star], got {grid.h}")
    if data.n_samples is not None and (
        data.n_samples < grid.nv + 1 or (data.n_samples - 1) % max(grid.nv, 1) != 0
    ):
        problems.append(f"data.n_samples must be k*nv+1 for an integer k >= 1, got {data.n_samples}")
    if not solver.l > 1.0:
        problems.append(f"solver.l must exceed 1, got {solver.l}")
    if not solver.tol > 0.0:
        problems.append(f"solver.tol must be positive, got {solver.tol}")
    if solver.max_iter < 1 or solver.inner_max_iter < 1:
        problems.append("solver.max_iter and solver.inner_max_iter must be at least 1")
    if solver.segments < 0:
        problems.append(f"solver.segments must be >= 0, got {solver.segments}")
    if (scenario.raster.nt > 0) != (scenario.raster.nr > 0) or min(scenario.raster.nt, scenario.raster.nr) == 1:
        problems.append("raster.nt and raster.nr must both be 0 or both be >= 2")
    return problems


def parse_grid(raw: str) -> Tuple[int, int]:
    """``"64x128"`` to ``(64, 128)``."""
    try:
        nu, nv = (int(part) for part in raw.lower().split("x"))
    except ValueError as exc:
        raise ScenarioError(f"--grid must look like NUxNV, got {raw!r}") from exc
    return nu, nv


def _profile(raw: Any, base_dir: Path, label: str, problems: List[str]) -> Profile:
    if isinstance(raw, (int, float)):
        return Profile(kind="constant", value=float(raw))
    if isinstance(raw, str):
        path = _resolve(base_dir, raw)
        if not path.exists():
            problems.append(f"{label} file not found: {path}")
            return Profile(kind="csv", path=path)
        return _csv_profile(path, label, problems)
    if not isinstance(raw, Mapping):
        problems.append(f"{label} must be a number, a CSV path or an inline table")
        return Profile()
    kind = str(raw.get("kind", "constant"))
    if kind not in PROFILE_KINDS:
        problems.append(f"{label}.kind must be one of {', '.join(PROFILE_KINDS)}, got {kind!r}")
        return Profile()
    if kind == "csv":
        path = _resolve(base_dir, str(raw.get("path", "")))
        if not path.exists():
            problems.append(f"{label} file not found: {path}")
            return Profile(kind="csv", path=path)
        return _csv_profile(path, label, problems)
    if kind == "samples":
        values = tuple(float(x) for x in raw.get("values", ()))
        params = tuple(float(x) for x in raw.get("params", ()))
        if not values:
            problems.append(f"{label}.values must not be empty")
        if params and len(params) != len(values):
            problems.append(f"{label}.params and {label}.values differ in length")
        return Profile(kind="samples", values=values, params=params)
    return Profile(
        kind=kind,
        value=float(raw.get("value", 0.0)),
        base=float(raw.get("base", 0.0)),
        amplitude=float(raw.get("amplitude", 0.0)),
        frequency=float(raw.get("frequency", 1.0)),
        slope=float(raw.get("slope", 0.0)),
    )


def _csv_profile(path: Path, label: str, problems: List[str]) -> Profile:
    try:
        table = np.genfromtxt(path, delimiter=",", names=None, comments="#", dtype=float)
    except ValueError as exc:
        problems.append(f"{label}: cannot read {path}: {exc}")
        return Profile(kind="csv", path=path)
    table = np.atleast_1d(table)
    if table.ndim == 2 and np.isnan(table[0]).all():
        table = table[1:]
    elif table.ndim == 1 and table.size and np.isnan(table[0]):
        table = table[1:]
    if table.ndim == 1:
        return Profile(kind="csv", values=tuple(table.tolist()), path=path)
    return Profile(kind="csv", params=tuple(table[:, 0].tolist()), values=tuple(table[:, 1].tolist()), path=path)


def _resolve(base_dir: Path, raw: str) -> Path:
    path = Path(raw).expanduser()
    return path if path.is_absolute() else (base_dir / path).resolve()


def _opt_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def _opt_int(value: Any) -> Optional[int]:
    return None if value is None else int(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


__all__ = [
    "EosSection",
    "Profile",
    "DataSection",
    "GridSection",
    "SolverSection",
    "RasterSection",
    "ChecksSection",
    "Scenario",
    "build_eos",
    "free_data",
    "load_scenario",
    "scenario_from_mapping",
    "validate",
    "parse_grid",
]
