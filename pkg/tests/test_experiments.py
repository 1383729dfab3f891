import json
from dataclasses import replace

import numpy as np
import pytest

from causalwind.errors import ParameterError
from causalwind.experiments import (CATALOG, CEM_SCENARIO, EXAMPLE_SCENARIO, ExperimentSettings, ScenarioSpec,
                                    WindSettings, build_environments, env_count_speeds, group_speeds,
                                    persist_results, range_similarity_speeds, run_experiment_windspeed,
                                    scenario_by_name)
from causalwind.search import RandomSearchConfig
from causalwind.wind import ConstantWind, DrydenWind, ShearWind

W = WindSettings()


def test_catalog_has_seven_named_scenarios():
    assert len(CATALOG) == 7
    assert len({s.name for s in CATALOG}) == 7
    assert scenario_by_name("light_constant_vs_strong_constant") is CATALOG[1]
    with pytest.raises(ParameterError):
        scenario_by_name("nope")


def test_same_class_groups_split_a_shared_grid():
    s1, s2 = group_speeds(CATALOG[0].with_counts(5), W)
    assert s1[0] == pytest.approx(0.45) and s2[-1] == pytest.approx(1.34)
    assert max(s1) < min(s2)
    assert len(s1) == len(s2) == 5


def test_distinct_class_groups_span_own_ranges():
    s1, s2 = group_speeds(CATALOG[1], W)
    assert (s1[0], s1[-1]) == pytest.approx((0.45, 1.34))
    assert (s2[0], s2[-1]) == pytest.approx((11.18, 13.86))


def test_environment_families_and_seeds():
    spec = CATALOG[6]
    g1, g2 = build_environments(spec, W, master_seed=3)
    assert all(isinstance(e, ConstantWind) for e in g1.environments)
    assert all(isinstance(e, DrydenWind) for e in g2.environments)
    assert len({e.seed for e in g2.environments}) == len(g2)
    g1b, g2b = build_environments(spec, W, master_seed=3)
    assert g2b.environments == g2.environments


def test_worked_example_environments():
    g1, g2 = build_environments(EXAMPLE_SCENARIO, W)
    assert isinstance(g1.environments[0], ShearWind)
    assert g1.environments[0].ref_velocity == (2.1, 10.1, 0.0)
    assert g1.environments[-1].ref_velocity == pytest.approx((2.5, 10.5, 0.0))
    assert g2.environments[2].velocity == pytest.approx((1.3, 1.3, 0.0))


def test_sign_flips_direction():
    spec = replace(CEM_SCENARIO, group2=replace(CEM_SCENARIO.group2, sign=-1))
    _, g2 = build_environments(spec, W)
    assert all(v < 0 for e in g2.environments for v in e.velocity[:2])


def test_range_similarity_removes_closest_pair():
    spec = CATALOG[0].with_counts(10)
    sweep = dict(range_similarity_speeds(spec, W, (10, 8, 3)))
    lo10, hi10 = sweep[10]
    lo3, hi3 = sweep[3]
    assert lo3 == lo10[:3] and hi3 == hi10[-3:]
    gap = lambda p: min(p[1]) - max(p[0])
    assert gap(sweep[3]) > gap(sweep[8]) > gap(sweep[10])


def test_env_count_keeps_endpoints():
    spec = CATALOG[0].with_counts(10)
    sweep = dict(env_count_speeds(spec, W, (10, 6, 3)))
    for n, (s1, s2) in sweep.items():
        assert len(s1) == len(s2) == n
        assert s1[0] == sweep[10][0][0] and s1[-1] == sweep[10][0][-1]
        assert s2[0] == sweep[10][1][0] and s2[-1] == sweep[10][1][-1]
    with pytest.raises(ParameterError):
        env_count_speeds(spec, W, (12,))


def test_scenario_dict_roundtrip():
    for s in CATALOG + (EXAMPLE_SCENARIO,):
        assert ScenarioSpec.from_dict(json.loads(json.dumps(s.to_dict()))) == s


def test_windspeed_runner_and_persistence(tmp_path):
    settings = ExperimentSettings(search=RandomSearchConfig(n_loops=2), n_env_windspeed=2, keep_trajectories=True)
    results = run_experiment_windspeed(settings, CATALOG[1:2])
    assert len(results) == 1 and len(results[0].records) == 2
    written = persist_results(results, tmp_path, {"master_seed": 0}, verbose=True)
    stem = "exp1_light_constant_vs_strong_constant"
    summary = json.loads((tmp_path / f"{stem}.json").read_text())
    assert summary["max"] == results[0].max and summary["master_seed"] == 0
    assert summary["seed"] == results[0].seed
    lines = (tmp_path / f"{stem}.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("loop,sweep_value,schedule_times")
    trajs = [p for p in written if "trajectories" in p.parts]
    assert len(trajs) == 2 * 4
    data = np.loadtxt(trajs[0], delimiter=",", skiprows=1)
    assert data.shape == (121, 4)
    assert not list(tmp_path.rglob("*.tmp"))
