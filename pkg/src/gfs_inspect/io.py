"""JSON scenario/controller/GA files and CSV exports.

Scenario and GA documents reject unknown keys and fill missing ones with the
nominal mission and GA defaults.  Scenario keys carry their unit as a suffix.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import BodyParams, ChiefState, RelativeState
from .errors import ConfigurationError
from .fuzzy import FisParams
from .ga import GaConfig
from .geometry import D_EARTH_SUN, SensorModel
from .guidance import AttitudeGains, Controller
from .harness import LOG_COLUMNS, N_MEAN_MOTION, EpisodeConfig

CONTROLLER_FORMAT = "gfs-inspect-controller"
CONTROLLER_VERSION = 1

SCENARIO_DEFAULTS = {
    "tf_s": 3600.0,
    "T_s": 10.0,
    "mean_motion_radps": N_MEAN_MOTION,
    "r0_m": [75.0, 0.0, 0.0],
    "v0_mps": [0.0, 0.0, 0.0],
    "q0": [0.0, 0.0, 0.0, 1.0],
    "w0_radps": None,  # defaults to [0, 0, n]
    "chief_q0": [0.0, 0.0, 0.0, 1.0],
    "chief_w0_radps": None,  # defaults to [0, 0, n]
    "chief_inertia_kgm2": (1000.0 * np.eye(3)).tolist(),
    "deputy_mass_kg": 12.0,
    "deputy_inertia_kgm2": np.eye(3).tolist(),
    "fmax_N": 1.0,
    "tmax_Nm": 0.010,
    "beta_deg": 15.0,
    "boresight": [-1.0, 0.0, 0.0],
    "n_points": 100,
    "ds_m": 10.0,
    "sun_theta0_rad": 0.0,
    "d_earth_sun_m": D_EARTH_SUN,
    "d_min_m": 15.0,
    "d_max_m": 200.0,
    "eta_threshold_pct": 95.0,
    "early_stop": False,
}

GA_KEYS = set(GaConfig().to_dict()) | {"iterations"}


def _read_json(path):
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{where}: unknown key '{unknown[0]}'", key=unknown[0])


# ---------------------------------------------------------------------------
# scenarios


def scenario_from_dict(doc) -> EpisodeConfig:
    _check_keys(doc, SCENARIO_DEFAULTS, "scenario")
    d = {**SCENARIO_DEFAULTS, **doc}
    n = float(d["mean_motion_radps"])
    w0 = d["w0_radps"] if d["w0_radps"] is not None else [0.0, 0.0, n]
    wc0 = d["chief_w0_radps"] if d["chief_w0_radps"] is not None else [0.0, 0.0, n]
    try:
        return EpisodeConfig(
            state0=RelativeState(d["r0_m"], d["v0_mps"], d["q0"], w0),
            chief=ChiefState(d["chief_q0"], wc0, np.array(d["chief_inertia_kgm2"], dtype=float)),
            body=BodyParams(float(d["deputy_mass_kg"]),
                            np.array(d["deputy_inertia_kgm2"], dtype=float), n,
                            float(d["fmax_N"]), float(d["tmax_Nm"])),
            sensor=SensorModel(np.array(d["boresight"], dtype=float),
                               np.deg2rad(float(d["beta_deg"]))),
            tf=float(d["tf_s"]), T=float(d["T_s"]), n_points=int(d["n_points"]),
            ds=float(d["ds_m"]), sun_theta0=float(d["sun_theta0_rad"]),
            dES=float(d["d_earth_sun_m"]), d_min=float(d["d_min_m"]),
            d_max=float(d["d_max_m"]), eta_threshold=float(d["eta_threshold_pct"]),
            early_stop=bool(d["early_stop"]),
        )
    except ConfigurationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"scenario: {exc}") from exc


def scenario_to_dict(cfg: EpisodeConfig):
    return {
        "tf_s": cfg.tf, "T_s": cfg.T, "mean_motion_radps": cfg.body.n,
        "r0_m": cfg.state0.r.tolist(), "v0_mps": cfg.state0.v.tolist(),
        "q0": cfg.state0.q.tolist(), "w0_radps": cfg.state0.w.tolist(),
        "chief_q0": cfg.chief.qc.tolist(), "chief_w0_radps": cfg.chief.wc.tolist(),
        "chief_inertia_kgm2": cfg.chief.Jc.tolist(), "deputy_mass_kg": cfg.body.md,
        "deputy_inertia_kgm2": cfg.body.Jd.tolist(), "fmax_N": cfg.body.fmax,
        "tmax_Nm": cfg.body.tmax, "beta_deg": float(np.rad2deg(cfg.sensor.beta)),
        "boresight": cfg.sensor.boresight.tolist(), "n_points": cfg.n_points,
        "ds_m": cfg.ds, "sun_theta0_rad": cfg.sun_theta0, "d_earth_sun_m": cfg.dES,
        "d_min_m": cfg.d_min, "d_max_m": cfg.d_max, "eta_threshold_pct": cfg.eta_threshold,
        "early_stop": cfg.early_stop,
    }


def load_scenario(path) -> EpisodeConfig:
    return scenario_from_dict(_read_json(path))


def save_scenario(path, cfg: EpisodeConfig):
    _write_json(path, scenario_to_dict(cfg))


def load_scenario_set(path):
    """Training set: ``{"base": {...}, "initial_positions_m": [[x, y, z], ...]}``.

    Without positions the eight octant starts at 75 m are used.
    """
    from .ga import training_scenarios

    doc = _read_json(path)
    _check_keys(doc, {"base", "initial_positions_m"}, "scenario set")
    base = scenario_from_dict(doc.get("base", {}))
    positions = doc.get("initial_positions_m")
    if positions is None:
        return training_scenarios(base=base)
    if not positions:
        raise ConfigurationError("scenario set: initial_positions_m is empty",
                                 key="initial_positions_m")
    return [base.with_position(p) for p in positions]


def load_ga_config(path=None):
    """GA settings plus the number of warm-started training iterations."""
    doc = _read_json(path) if path is not None else {}
    _check_keys(doc, GA_KEYS, "GA config")
    doc = dict(doc)
    iterations = int(doc.pop("iterations", 1))
    if iterations < 1:
        raise ConfigurationError("iterations must be >= 1", key="iterations")
    try:
        return GaConfig(**doc), iterations
    except TypeError as exc:
        raise ConfigurationError(f"GA config: {exc}") from exc


# ---------------------------------------------------------------------------
# controllers


def controller_to_dict(controller: Controller, provenance=None):
    return {
        "format": CONTROLLER_FORMAT,
        "version": CONTROLLER_VERSION,
        "fis": {axis: f.to_dict() for axis, f in zip("xyz", controller.fis)},
        "attitude": {"Kp_Nm": controller.gains.Kp.tolist(),
                     "Kd_Nms": controller.gains.Kd.tolist(),
                     "mode": controller.attitude_mode},
        "provenance": provenance or {},
    }


def controller_from_dict(doc):
    if doc.get("format") != CONTROLLER_FORMAT:
        raise ConfigurationError("not a controller file", key="format")
    version = doc.get("version")
    if version != CONTROLLER_VERSION:
        raise ConfigurationError(
            f"controller file version {version} is not supported (expected "
            f"{CONTROLLER_VERSION}); re-export it with a matching gfs-inspect release "
            f"or retrain with 'gfs-inspect train'", key="version")
    att = doc["attitude"]
    return Controller(
        *(FisParams.from_dict(doc["fis"][axis]) for axis in "xyz"),
        gains=AttitudeGains(np.array(att["Kp_Nm"]), np.array(att["Kd_Nms"])),
        attitude_mode=att.get("mode", "boresight"),
    )


def save_controller(path, controller: Controller, provenance=None):
    _write_json(path, controller_to_dict(controller, provenance))


def load_controller(path) -> Controller:
    return controller_from_dict(_read_json(path))


def load_provenance(path):
    return _read_json(path).get("provenance", {})


def reference_controller_path():
    return Path(__file__).with_name("data") / "reference_controller.json"


def reference_controller() -> Controller:
    """The trained controller shipped with the package."""
    return load_controller(reference_controller_path())


# ---------------------------------------------------------------------------
# CSV


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_trajectory_csv(path, trajectory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in trajectory:
            w.writerow([_fmt(int(v)) if c == "newly_inspected" else _fmt(v)
                        for c, v in zip(LOG_COLUMNS, row)])


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != LOG_COLUMNS:
        raise ConfigurationError(f"{path}: unexpected trajectory columns")
    return np.array([[float(v) for v in r] for r in rows[1:]])


def write_rows_csv(path, rows, columns=None):
    columns = columns or list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


SUMMARY_COLUMNS = [("delta_v", "delta_v_mps"), ("insp_rate", "insp_rate_pct"),
                   ("mean_dist", "mean_dist_m")]


def write_summary_csv(path, summary):
    """Mean / standard deviation rows of delta-v, inspection rate and distance."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["statistic"] + [name for _, name in SUMMARY_COLUMNS])
        for label, key in (("Mean", "mean"), ("Standard deviation", "std")):
            w.writerow([label] + [_fmt(summary[k][key]) for k, _ in SUMMARY_COLUMNS])
