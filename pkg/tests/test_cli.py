import json

import numpy as np
import pytest

from causalwind.cli import main
from causalwind.config import load_config, parse_config
from causalwind.errors import ConfigError

UAV = {"mass": 2.0, "drag_coeff": 0.1, "cross_section": 0.01}


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_minimal_config_uses_defaults():
    cfg = parse_config({"uav": UAV})
    assert cfg.sim.n_samples == 121
    assert cfg.cem.n_samples == 30 and cfg.cem.n_elite == 4
    assert cfg.search.n_loops == 50
    assert len(cfg.scenarios) == 7


@pytest.mark.parametrize("data,field", [
    ({"uav": {"drag_coeff": 0.1, "cross_section": 0.01}}, "uav.mass"),
    ({"uav": {**UAV, "mass": -1}}, "uav"),
    ({"uav": {**UAV, "wingspan": 1}}, "uav.wingspan"),
    ({"uav": UAV, "sim": {"dt": "fast"}}, "sim.dt"),
    ({"uav": UAV, "cem": {"n_elite": 40}}, "cem"),
    ({"uav": UAV, "cluster": {"metric": "euclid"}}, "cluster.metric"),
    ({"uav": UAV, "simulate": {"schedule": {"times": [1.0], "forces": [[0, 0, 1]]}}}, "simulate.schedule"),
    ({"uav": UAV, "bogus": 1}, "bogus"),
    ({}, "uav"),
])
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.field == field


def test_seed_override():
    assert parse_config({"uav": UAV, "seed": 4}).seed == 4
    assert parse_config({"uav": UAV, "seed": 4}, seed_override=9).seed == 9


def test_resolved_config_roundtrips(tmp_path, capsys):
    path = write_config(tmp_path, {"uav": UAV, "seed": 3, "search": {"n_loops": 7}})
    assert main(["validate-config", "-c", path]) == 0
    echoed = capsys.readouterr().out
    again = write_config(tmp_path, json.loads(echoed), "echo.json")
    assert load_config(again).to_dict() == load_config(path).to_dict()
    assert json.loads(echoed)["search"]["n_loops"] == 7


def test_validate_missing_mass_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, {"uav": {"drag_coeff": 0.1, "cross_section": 0.01}})
    assert main(["validate-config", "-c", path]) == 2
    assert "mass" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["validate-config", "-c", str(tmp_path / "absent.json")]) == 2


def test_argument_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["fly"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["experiment", "7", "-c", "x.json"])
    assert info.value.code == 2


def test_simulate_writes_121_rows(tmp_path):
    path = write_config(tmp_path, {"uav": UAV})
    out = tmp_path / "out"
    assert main(["simulate", "-c", path, "-o", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x,y,z" and len(lines) == 122
    assert json.loads((out / "trajectory.json").read_text())["seed"] == 0


def test_output_dir_from_environment(tmp_path, monkeypatch):
    path = write_config(tmp_path, {"uav": UAV})
    monkeypatch.setenv("CAUSALWIND_OUTPUT_DIR", str(tmp_path / "envout"))
    assert main(["simulate", "-c", path]) == 0
    assert (tmp_path / "envout" / "trajectory.csv").exists()


def test_runtime_failure_exits_1(tmp_path, capsys):
    path = write_config(tmp_path, {"uav": {**UAV, "mass": 1e-300}})
    assert main(["simulate", "-c", path, "-o", str(tmp_path / "o")]) == 1
    assert "SimulationDiverged" in capsys.readouterr().err
    assert not (tmp_path / "o" / "trajectory.csv").exists()


def test_cluster_directory(tmp_path, capsys):
    cfg = write_config(tmp_path, {"uav": UAV})
    d = tmp_path / "trajs"
    d.mkdir()
    t = np.arange(20) * 0.1
    for i, v in enumerate([1.0, 1.1, 9.0, 9.2]):
        rows = np.column_stack([t, v * t, 0 * t, 0 * t])
        np.savetxt(d / f"e{i}.csv", rows, delimiter=",", header="t,x,y,z", comments="")
    assert main(["cluster", str(d), "-c", cfg]) == 0
    out = dict(line.split(",") for line in capsys.readouterr().out.splitlines())
    assert out["e0.csv"] == out["e1.csv"] != out["e2.csv"] == out["e3.csv"]
    assert float(out["silhouette"]) > 0.8


def test_cluster_rejects_bad_csv(tmp_path):
    cfg = write_config(tmp_path, {"uav": UAV})
    d = tmp_path / "bad"
    d.mkdir()
    for i in range(2):
        (d / f"e{i}.csv").write_text("a,b\n1,2\n")
    assert main(["cluster", str(d), "-c", cfg]) == 1


def test_experiment_outputs_embed_seed(tmp_path):
    cfg = write_config(tmp_path, {"uav": UAV, "seed": 11, "search": {"n_loops": 2},
                                  "experiments": {"n_env_direction": 2}})
    out = tmp_path / "exp"
    assert main(["experiment", "5", "-c", cfg, "-o", str(out), "--seed", "12", "-j", "1"]) == 0
    files = sorted(out.glob("*.json"))
    assert len(files) == 2
    for f in files:
        data = json.loads(f.read_text())
        assert data["master_seed"] == 12 and data["config"]["seed"] == 12
