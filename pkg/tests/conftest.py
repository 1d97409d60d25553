import os
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

os.environ.setdefault("CHARFLOW_LOG_DIR", tempfile.mkdtemp(prefix="charflow_logs_"))

import pytest  # noqa: E402

SCENARIOS = ROOT / "charflow" / "config" / "scenarios"


def scenario_mapping(**sections):
    """A smooth spherical scenario as a raw mapping; keyword sections replace or extend the defaults."""
    raw = {
        "name": "smooth",
        "eos": {"kind": "polytropic", "gamma": 2.0, "kappa": 0.5, "rho_min": 0.25, "rho_max": 4.0},
        "geometry": {"mode": "spherical"},
        "data": {
            "r0": 1.0,
            "u_star": 0.25,
            "v_star": 0.5,
            "beta_plus": {"kind": "sine", "base": 2.0, "amplitude": 0.1, "frequency": 1.0},
            "alpha_minus": {"kind": "linear", "base": 2.0, "slope": 0.1},
        },
        "grid": {"nu": 8, "nv": 16},
        "solver": {"tol": 1e-12, "max_iter": 80, "segments": 1},
    }
    for name, values in sections.items():
        merged = dict(raw.get(name, {}))
        merged.update(values)
        raw[name] = merged
    return raw


def build_scenario(**sections):
    from charflow.scenario import scenario_from_mapping

    return scenario_from_mapping(scenario_mapping(**sections), base_dir=SCENARIOS, name="smooth")


STATIC = {
    "eos": {"kind": "polytropic", "gamma": 2.0, "kappa": 0.5},
    "data": {
        "r0": 1.0,
        "u_star": 0.5,
        "v_star": 1.0,
        "beta_plus": {"kind": "constant", "value": 2.0},
        "alpha_minus": {"kind": "constant", "value": 2.0},
    },
}


@pytest.fixture()
def smooth_scenario():
    return build_scenario()


@pytest.fixture()
def static_scenario():
    return build_scenario(eos=STATIC["eos"], data=STATIC["data"], grid={"nu": 16, "nv": 32})
