import csv
import hashlib
import json

import numpy as np
import pytest

from gfs_inspect.cli import main
from gfs_inspect.errors import ConfigurationError
from gfs_inspect.guidance import Controller, default_controller
from gfs_inspect.harness import LOG_COLUMNS, EpisodeConfig, delta_v
from gfs_inspect.io import (CONTROLLER_VERSION, controller_to_dict, load_controller,
                            load_ga_config, load_provenance, load_scenario, load_scenario_set,
                            read_trajectory_csv, reference_controller, save_controller,
                            save_scenario, scenario_from_dict, scenario_to_dict)

from conftest import constant_fis


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def ctrl_path(tmp_path):
    p = tmp_path / "ctrl.json"
    save_controller(p, default_controller(), {"note": "test"})
    return p


@pytest.fixture
def zero_ctrl_path(tmp_path):
    f = constant_fis(2)
    p = tmp_path / "zero.json"
    save_controller(p, Controller(f, f, f))
    return p


@pytest.fixture
def scenario_path(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps({"r0_m": [60.0, 20.0, -10.0], "tf_s": 600.0}))
    return p


def test_scenario_defaults_and_round_trip(tmp_path):
    cfg = scenario_from_dict({})
    assert cfg.tf == 3600.0 and cfg.T == 10.0 and cfg.d_min == 15.0 and cfg.d_max == 200.0
    assert np.array_equal(cfg.state0.w, [0, 0, cfg.body.n])
    assert cfg.body.md == 12.0 and cfg.body.fmax == 1.0 and cfg.body.tmax == 0.010
    assert np.isclose(np.rad2deg(cfg.sensor.beta), 15.0)
    cfg = scenario_from_dict({"r0_m": [1.0, 2.0, 30.0], "sun_theta0_rad": 0.5})
    save_scenario(tmp_path / "s.json", cfg)
    assert scenario_to_dict(load_scenario(tmp_path / "s.json")) == scenario_to_dict(cfg)


def test_scenario_unknown_key_named():
    with pytest.raises(ConfigurationError) as exc:
        scenario_from_dict({"tf": 100.0})
    assert exc.value.key == "tf"


def test_scenario_invalid_value():
    with pytest.raises(ConfigurationError):
        scenario_from_dict({"tf_s": 105.0})


def test_scenario_set(tmp_path):
    p = tmp_path / "set.json"
    p.write_text(json.dumps({"base": {"tf_s": 100.0}, "initial_positions_m": [[60, 0, 0]]}))
    scen = load_scenario_set(p)
    assert len(scen) == 1 and scen[0].tf == 100.0
    p.write_text(json.dumps({}))
    assert len(load_scenario_set(p)) == 8


def test_ga_config_file(tmp_path):
    cfg, it = load_ga_config(None)
    assert (cfg.population, cfg.generations, it) == (200, 500, 1)
    p = tmp_path / "ga.json"
    p.write_text(json.dumps({"population": 20, "iterations": 3}))
    cfg, it = load_ga_config(p)
    assert cfg.population == 20 and it == 3
    p.write_text(json.dumps({"pop": 20}))
    with pytest.raises(ConfigurationError) as exc:
        load_ga_config(p)
    assert exc.value.key == "pop"


def test_controller_round_trip_bit_exact(ctrl_path):
    c = default_controller()
    d = load_controller(ctrl_path)
    assert all(a == b for a, b in zip(c.fis, d.fis))
    assert np.array_equal(c.gains.Kp, d.gains.Kp) and np.array_equal(c.gains.Kd, d.gains.Kd)
    assert controller_to_dict(d, {"note": "test"}) == json.loads(ctrl_path.read_text())
    assert load_provenance(ctrl_path) == {"note": "test"}


def test_controller_version_mismatch(tmp_path, ctrl_path, scenario_path, capsys):
    doc = json.loads(ctrl_path.read_text())
    doc["version"] = CONTROLLER_VERSION + 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ConfigurationError):
        load_controller(bad)
    assert main(["evaluate", str(bad), str(scenario_path)]) == 2
    err = capsys.readouterr().err
    assert "version" in err and "retrain" in err


def test_reference_controller_loads():
    c = reference_controller()
    assert len(c.fis) == 3


def test_evaluate_zero_controller(zero_ctrl_path, scenario_path, tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert main(["evaluate", str(zero_ctrl_path), str(scenario_path),
                 "--export-trajectory", str(out)]) == 0
    text = capsys.readouterr().out
    assert "delta_v_mps      0.000" in text
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == LOG_COLUMNS
    assert len(rows) - 1 == 600 // 10 + 1


def test_evaluate_csv_consistency(ctrl_path, scenario_path, tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert main(["simulate", str(ctrl_path), str(scenario_path),
                 "--export-trajectory", str(out)]) == 0
    printed = dict(line.split(maxsplit=1) for line in capsys.readouterr().out.splitlines()
                   if line.startswith("delta_v_mps"))
    traj = read_trajectory_csv(out)
    assert traj.shape == (61, len(LOG_COLUMNS))
    assert np.all(np.diff(traj[:, 21]) >= 0)
    dv = delta_v(traj[:, 14:17], 12.0, 10.0)
    assert f"{dv:.3f}" == printed["delta_v_mps"].strip()
    from gfs_inspect.harness import run_episode
    assert dv == run_episode(load_scenario(scenario_path), load_controller(ctrl_path)).delta_v


def test_simulate_requires_export(ctrl_path):
    with pytest.raises(SystemExit):
        main(["simulate", str(ctrl_path)])


def test_missing_files_exit_2(tmp_path, ctrl_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["evaluate", str(ctrl_path), str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err
    assert main(["train", str(missing), "-o", str(tmp_path / "o.json")]) == 2
    assert str(missing) in capsys.readouterr().err
    assert main(["montecarlo", str(missing), "-o", str(tmp_path / "mc")]) == 2


def test_bad_config_key_exit_2(tmp_path, ctrl_path, capsys):
    p = tmp_path / "scen.json"
    p.write_text(json.dumps({"rO_m": [60, 0, 0]}))
    assert main(["evaluate", str(ctrl_path), str(p)]) == 2
    assert "rO_m" in capsys.readouterr().err


def _train(tmp_path, ctrl_path, name):
    sset = tmp_path / "set.json"
    sset.write_text(json.dumps({"base": {"tf_s": 200.0},
                                "initial_positions_m": [[60.0, 10.0, 5.0]]}))
    ga = tmp_path / "ga.json"
    ga.write_text(json.dumps({"population": 6, "generations": 2, "iterations": 2}))
    out = tmp_path / name
    rc = main(["train", str(sset), str(ga), "-o", str(out), "--seed", "5",
               "--warm-start", str(ctrl_path), "--workers", "1"])
    return rc, out


def test_train_deterministic(tmp_path, ctrl_path):
    rc1, out1 = _train(tmp_path, ctrl_path, "a.json")
    rc2, out2 = _train(tmp_path, ctrl_path, "b.json")
    assert rc1 == rc2 == 0
    assert sha(out1) == sha(out2)
    hist1, hist2 = out1.with_suffix(".fitness.csv"), out2.with_suffix(".fitness.csv")
    assert sha(hist1) == sha(hist2)
    with open(hist1, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert all(float(b["best"]) <= float(a["best"]) for a, b in zip(rows, rows[1:]))
    prov = load_provenance(out1)
    assert prov["seed"] == 5 and prov["ga_config"]["population"] == 6
    assert prov["ga_config"]["tournament_size"] == 4
    assert prov["ga_config"]["crossover_rate"] == 0.8


def test_montecarlo_cli(ctrl_path, scenario_path, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["montecarlo", str(ctrl_path), str(scenario_path), "--runs", "3", "--seed", "7"]
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    assert (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()
    with open(a / "summary.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert [r[0] for r in rows[1:]] == ["Mean", "Standard deviation"]
    assert rows[0][1:] == ["delta_v_mps", "insp_rate_pct", "mean_dist_m"]
    with open(a / "runs.csv", newline="") as fh:
        runs = list(csv.DictReader(fh))
    assert len(runs) == 3 and all(50 <= float(r["r0"]) <= 100 for r in runs)


def test_montecarlo_rejects_zero_runs(ctrl_path, tmp_path, capsys):
    assert main(["montecarlo", str(ctrl_path), "--runs", "0", "-o", str(tmp_path)]) == 2
    assert "runs" in capsys.readouterr().err


def test_reference_keyword(capsys):
    assert main(["evaluate", "reference"]) == 0
    assert "insp_rate_pct" in capsys.readouterr().out
