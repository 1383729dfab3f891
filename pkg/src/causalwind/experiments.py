"""Scenario catalog, environment construction and runners for experiments 1-6."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .curiosity import EnvironmentGroup, EvalContext
from .errors import ParameterError
from .search import (CemConfig, CemResult, RandomSearchConfig, cem_run, matched_random_config,
                     random_search, summarize)
from .seeding import derive_seed
from .wind import STRONG_SCALE_LENGTH, STRONG_SIGMA, ConstantWind, DrydenWind, ShearWind

LIGHT_RANGE = (0.45, 1.34)
STRONG_RANGE = (11.18, 13.86)
FAMILIES = ("constant", "shear", "turbulence")
AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class WindSettings:
    light_range: tuple = LIGHT_RANGE
    strong_range: tuple = STRONG_RANGE
    shear_alpha: float = 0.143
    shear_ref_altitude: float = 1.0
    shear_min_altitude: float = 0.1
    turbulence_sigma: tuple = STRONG_SIGMA
    turbulence_scale_length: tuple = STRONG_SCALE_LENGTH
    turbulence_airspeed: tuple | None = None

    def class_range(self, speed_class: str) -> tuple:
        if speed_class == "light":
            return tuple(self.light_range)
        if speed_class == "strong":
            return tuple(self.strong_range)
        raise ParameterError(f"unknown speed class {speed_class!r}")


@dataclass(frozen=True)
class GroupSpec:
    family: str
    speed_class: str = "light"
    n_environments: int = 5
    sign: int = 1
    axes: tuple = ("x", "y")
    speed_range: tuple | None = None      # overrides the class range
    axis_ranges: tuple | None = None      # ((axis, lo, hi), ...) per-axis override

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown wind family {self.family!r}")
        if self.n_environments < 1:
            raise ParameterError("n_environments must be >= 1")
        if self.sign not in (1, -1):
            raise ParameterError("sign must be +1 or -1")
        object.__setattr__(self, "axes", tuple(self.axes))
        if any(a not in AXES for a in self.axes):
            raise ParameterError(f"axes must be drawn from x, y, z: {self.axes}")
        if self.speed_range is not None:
            object.__setattr__(self, "speed_range", tuple(float(v) for v in self.speed_range))
        if self.axis_ranges is not None:
            object.__setattr__(self, "axis_ranges", tuple((a, float(lo), float(hi)) for a, lo, hi in self.axis_ranges))

    def resolved_range(self, winds: WindSettings) -> tuple:
        lo, hi = self.speed_range if self.speed_range is not None else winds.class_range(self.speed_class)
        if lo > hi:
            raise ParameterError(f"inverted speed range ({lo}, {hi})")
        return lo, hi

    def describe(self) -> str:
        return f"{self.speed_class} {self.family}"


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    group1: GroupSpec
    group2: GroupSpec

    def with_counts(self, n: int) -> "ScenarioSpec":
        return replace(self, group1=replace(self.group1, n_environments=n), group2=replace(self.group2, n_environments=n))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(d["name"], GroupSpec(**d["group1"]), GroupSpec(**d["group2"]))


def _scenario(name, fam1, cls1, fam2, cls2, n=5):
    return ScenarioSpec(name, GroupSpec(fam1, cls1, n), GroupSpec(fam2, cls2, n))


# Wind-condition pairs, in the order experiment 1 runs them.
CATALOG = (
    _scenario("light_constant_vs_light_constant", "constant", "light", "constant", "light"),
    _scenario("light_constant_vs_strong_constant", "constant", "light", "constant", "strong"),
    _scenario("strong_constant_vs_strong_constant", "constant", "strong", "constant", "strong"),
    _scenario("light_shear_vs_light_shear", "shear", "light", "shear", "light"),
    _scenario("light_shear_vs_strong_shear", "shear", "light", "shear", "strong"),
    _scenario("strong_shear_vs_strong_shear", "shear", "strong", "shear", "strong"),
    _scenario("light_constant_vs_strong_turbulence", "constant", "light", "turbulence", "strong"),
)
SWEEP_SCENARIOS = CATALOG[:4]
DIRECTION_SCENARIO = _scenario("light_constant_vs_light_shear", "constant", "light", "shear", "light")
CEM_SCENARIO = _scenario("light_shear_vs_light_constant", "shear", "light", "constant", "light")

# Wind parameters of the strong-shear vs light-constant worked example.
EXAMPLE_SCENARIO = ScenarioSpec(
    "example_strong_shear_vs_light_constant",
    GroupSpec("shear", "strong", 5, axis_ranges=(("x", 2.1, 2.5), ("y", 10.1, 10.5))),
    GroupSpec("constant", "light", 5, axis_ranges=(("x", 1.1, 1.5), ("y", 1.1, 1.5))),
)


def scenario_by_name(name: str, catalog=CATALOG) -> ScenarioSpec:
    for s in tuple(catalog) + (DIRECTION_SCENARIO, CEM_SCENARIO, EXAMPLE_SCENARIO):
        if s.name == name:
            return s
    raise ParameterError(f"unknown scenario {name!r}")


def _grid(lo, hi, n):
    if n == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, n)


def _shares_grid(spec: ScenarioSpec, winds: WindSettings) -> bool:
    g1, g2 = spec.group1, spec.group2
    return (g1.family == g2.family and g1.axis_ranges is None and g2.axis_ranges is None
            and g1.resolved_range(winds) == g2.resolved_range(winds))


def group_speeds(spec: ScenarioSpec, winds: WindSettings = WindSettings()):
    """Evenly spaced reference speeds for both groups.

    Groups of the same family over the same range share one grid of
    ``n1 + n2`` speeds: group 1 takes the lower part, group 2 the upper.
    Otherwise each group spans its own range.
    """
    g1, g2 = spec.group1, spec.group2
    if _shares_grid(spec, winds):
        grid = _grid(*g1.resolved_range(winds), g1.n_environments + g2.n_environments)
        return grid[:g1.n_environments].tolist(), grid[g1.n_environments:].tolist()
    return (_grid(*g1.resolved_range(winds), g1.n_environments).tolist(),
            _grid(*g2.resolved_range(winds), g2.n_environments).tolist())


def _velocities(gspec: GroupSpec, speeds, winds: WindSettings):
    n = len(speeds)
    vel = np.zeros((n, 3))
    if gspec.axis_ranges is not None:
        gspec.resolved_range(winds)
        frac = [0.5] if n == 1 else np.linspace(0.0, 1.0, n)
        for axis, lo, hi in gspec.axis_ranges:
            if lo > hi:
                raise ParameterError(f"inverted range on axis {axis}")
            vel[:, AXES[axis]] = lo + (hi - lo) * np.asarray(frac)
    else:
        for axis in gspec.axes:
            vel[:, AXES[axis]] = speeds
    return vel * gspec.sign


def make_group(gspec: GroupSpec, speeds, winds: WindSettings = WindSettings(), label: str = "",
               group_index: int = 0, master_seed: int = 0, dt: float = 0.1, horizon: float = 12.0) -> EnvironmentGroup:
    envs = []
    for i, v in enumerate(_velocities(gspec, speeds, winds)):
        v = tuple(v.tolist())
        if gspec.family == "constant":
            envs.append(ConstantWind(v))
        elif gspec.family == "shear":
            envs.append(ShearWind(v, winds.shear_ref_altitude, winds.shear_alpha, winds.shear_min_altitude))
        else:
            envs.append(DrydenWind(v, winds.turbulence_sigma, winds.turbulence_scale_length, winds.turbulence_airspeed,
                                   dt=dt, horizon=horizon, seed=derive_seed(master_seed, group_index, i)))
    return EnvironmentGroup(label or gspec.describe(), tuple(envs))


def build_environments(spec: ScenarioSpec, winds: WindSettings = WindSettings(), master_seed: int = 0,
                       dt: float = 0.1, horizon: float = 12.0, speeds=None):
    """Both environment groups of a scenario; ``speeds`` overrides the default grids."""
    s1, s2 = speeds if speeds is not None else group_speeds(spec, winds)
    return (make_group(spec.group1, s1, winds, "group1", 1, master_seed, dt, horizon),
            make_group(spec.group2, s2, winds, "group2", 2, master_seed, dt, horizon))


@dataclass
class ExperimentResult:
    experiment: str
    scenario: ScenarioSpec
    records: list
    max: float
    mean: float
    seed: int
    sweep_name: str | None = None
    sweep_value: object = None
    speeds: tuple | None = None

    def recompute_summary(self) -> tuple:
        return summarize([r.score for r in self.records])


@dataclass
class ExperimentSettings:
    """Everything a runner needs besides the scenario."""

    ctx: EvalContext = EvalContext()
    winds: WindSettings = WindSettings()
    search: RandomSearchConfig = RandomSearchConfig()
    cem: CemConfig = CemConfig()
    seed: int = 0
    jobs: int = 1
    keep_trajectories: bool = False
    n_env_windspeed: int = 5
    n_env_sweep: int = 10
    n_env_direction: int = 5
    n_env_cem: int = 5
    range_sizes: tuple = (10, 9, 8, 7, 6, 5, 4, 3)
    count_sizes: tuple = (10, 8, 6, 4, 3)
    change_counts: tuple = (0, 2, 4, 6, 8, 10, 12)


def _run_point(experiment, spec, settings, seed, speeds=None, search=None, sweep_name=None, sweep_value=None):
    sim = settings.ctx.sim
    g1, g2 = build_environments(spec, settings.winds, seed, sim.dt, sim.total_time, speeds)
    search = replace(search or settings.search, seed=seed)
    res = random_search(g1, g2, search, settings.ctx, settings.jobs, settings.keep_trajectories)
    s = speeds if speeds is not None else group_speeds(spec, settings.winds)
    return ExperimentResult(experiment, spec, res.records, res.max, res.mean, seed, sweep_name, sweep_value,
                            (tuple(s[0]), tuple(s[1])))


def run_experiment_windspeed(settings: ExperimentSettings, scenarios=CATALOG, n_loops: int | None = None) -> list:
    """Random search on each wind-condition pair (experiment 1)."""
    out = []
    search = replace(settings.search, n_loops=n_loops) if n_loops else settings.search
    for k, spec in enumerate(scenarios):
        spec = spec.with_counts(settings.n_env_windspeed)
        out.append(_run_point("exp1", spec, settings, derive_seed(settings.seed, 1, k), search=search))
    return out


def _lower_upper(speeds):
    s1, s2 = list(speeds[0]), list(speeds[1])
    flipped = np.mean(s1) > np.mean(s2)
    return (s2, s1, True) if flipped else (s1, s2, False)


def range_similarity_speeds(spec: ScenarioSpec, winds: WindSettings, sizes) -> list:
    """Speed lists per sweep size, dropping the two closest environments each time."""
    lower, upper, flipped = _lower_upper(group_speeds(spec, winds))
    lower, upper = sorted(lower), sorted(upper)
    out = []
    for n in sorted(sizes, reverse=True):
        if n > len(lower):
            raise ParameterError(f"sweep size {n} exceeds the starting count {len(lower)}")
        while len(lower) > n:
            lower.pop()
            upper.pop(0)
        pair = (list(upper), list(lower)) if flipped else (list(lower), list(upper))
        out.append((n, pair))
    return out


def env_count_speeds(spec: ScenarioSpec, winds: WindSettings, sizes) -> list:
    """Speed lists per sweep size, dropping the median environment so endpoints stay fixed."""
    s1, s2 = (sorted(s) for s in group_speeds(spec, winds))
    out = []
    for n in sorted(sizes, reverse=True):
        if n > len(s1):
            raise ParameterError(f"sweep size {n} exceeds the starting count {len(s1)}")
        while len(s1) > n:
            s1.pop((len(s1) - 1) // 2)
            s2.pop((len(s2) - 1) // 2)
        out.append((n, (list(s1), list(s2))))
    return out


def run_experiment_range_similarity(settings: ExperimentSettings, scenario: ScenarioSpec, index: int = 0) -> list:
    spec = scenario.with_counts(max(settings.range_sizes))
    return [
        _run_point("exp2", spec.with_counts(n), settings, derive_seed(settings.seed, 2, index, n), speeds,
                   sweep_name="n_per_group", sweep_value=n)
        for n, speeds in range_similarity_speeds(spec, settings.winds, settings.range_sizes)
    ]


def run_experiment_env_count(settings: ExperimentSettings, scenario: ScenarioSpec, index: int = 0) -> list:
    spec = scenario.with_counts(max(settings.count_sizes))
    return [
        _run_point("exp3", spec.with_counts(n), settings, derive_seed(settings.seed, 3, index, n), speeds,
                   sweep_name="n_per_group", sweep_value=n)
        for n, speeds in env_count_speeds(spec, settings.winds, settings.count_sizes)
    ]


def run_experiment_thrust_changes(settings: ExperimentSettings, scenario: ScenarioSpec, index: int = 0) -> list:
    spec = scenario.with_counts(settings.n_env_sweep)
    return [
        _run_point("exp4", spec, settings, derive_seed(settings.seed, 4, index, c),
                   search=replace(settings.search, n_changes=c), sweep_name="n_changes", sweep_value=c)
        for c in settings.change_counts
    ]


def run_experiment_direction(settings: ExperimentSettings, scenario: ScenarioSpec = DIRECTION_SCENARIO) -> list:
    """Same-direction and opposite-direction runs; only group 2's sign changes."""
    spec = scenario.with_counts(settings.n_env_direction)
    seed = derive_seed(settings.seed, 5)
    out = []
    for label, sign in (("same", spec.group1.sign), ("opposite", -spec.group1.sign)):
        s = replace(spec, name=f"{spec.name}_{label}_direction", group2=replace(spec.group2, sign=sign))
        out.append(_run_point("exp5", s, settings, seed, sweep_name="direction", sweep_value=label))
    return out


@dataclass
class CemExperimentResult:
    scenario: ScenarioSpec
    cem: CemResult
    baseline: ExperimentResult
    seed: int


def run_experiment_cem(settings: ExperimentSettings, scenario: ScenarioSpec = CEM_SCENARIO,
                       seed: int | None = None) -> CemExperimentResult:
    """CEM plus a random-search baseline given the same number of evaluations."""
    seed = derive_seed(settings.seed, 6) if seed is None else seed
    spec = scenario.with_counts(settings.n_env_cem)
    sim = settings.ctx.sim
    g1, g2 = build_environments(spec, settings.winds, seed, sim.dt, sim.total_time)
    cem = cem_run(g1, g2, replace(settings.cem, seed=seed), settings.ctx, settings.jobs)
    base_cfg = matched_random_config(settings.cem, cem.n_evaluations, settings.search.direction_mode, seed)
    base = random_search(g1, g2, base_cfg, settings.ctx, settings.jobs)
    baseline = ExperimentResult("exp6_random", spec, base.records, base.max, base.mean, seed, speeds=None)
    return CemExperimentResult(spec, cem, baseline, seed)


def run_experiment(number: int, settings: ExperimentSettings, scenarios=None) -> list:
    """Dispatch experiments 1-5; returns the list of results to persist."""
    if number == 1:
        return run_experiment_windspeed(settings, scenarios or CATALOG)
    sweepers = {2: run_experiment_range_similarity, 3: run_experiment_env_count, 4: run_experiment_thrust_changes}
    if number in sweepers:
        out = []
        for k, spec in enumerate(scenarios or SWEEP_SCENARIOS):
            out.extend(sweepers[number](settings, spec, k))
        return out
    if number == 5:
        return run_experiment_direction(settings, (scenarios or [DIRECTION_SCENARIO])[0])
    raise ParameterError(f"no experiment {number}; use 1-5 here and run_experiment_cem for 6")


# --- persistence -------------------------------------------------------------

def atomic_write(path, text: str) -> None:
    """Write to a temporary sibling then rename, so readers never see partial files."""
    path = Path(path)
    tmp = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _csv_text(fieldnames, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def trajectory_csv(traj) -> str:
    rows = [{"t": repr(float(t)), "x": repr(float(p[0])), "y": repr(float(p[1])), "z": repr(float(p[2]))}
            for t, p in zip(traj.times, traj.positions)]
    return _csv_text(["t", "x", "y", "z"], rows)


def _stem(result: ExperimentResult) -> str:
    return f"{result.experiment}_{result.scenario.name}"


def persist_results(results, output_dir, extra: dict | None = None, verbose: bool = False) -> list:
    """Write one CSV and one JSON summary per experiment/scenario.

    Sweep points of the same scenario share a file; rows carry the sweep value.
    With ``verbose`` and trajectories retained on the records, per-loop
    trajectory CSVs go under ``trajectories/``.
    """
    out_dir = Path(output_dir)
    groups: dict = {}
    for r in results:
        groups.setdefault(_stem(r), []).append(r)
    written = []
    for stem, items in groups.items():
        rows = []
        for r in items:
            for i, rec in enumerate(r.records):
                row = {"loop": i, "sweep_value": "" if r.sweep_value is None else r.sweep_value}
                row.update(rec.csv_row())
                rows.append(row)
        fields = ["loop", "sweep_value"] + list(items[0].records[0].CSV_FIELDS)
        atomic_write(out_dir / f"{stem}.csv", _csv_text(fields, rows))
        summary = {
            "experiment": items[0].experiment,
            "scenario": items[0].scenario.to_dict(),
            "seed": items[0].seed if len(items) == 1 else None,
            "sweep_name": items[0].sweep_name,
            "max": items[0].max if len(items) == 1 else None,
            "mean": items[0].mean if len(items) == 1 else None,
            "points": [
                {"sweep_value": r.sweep_value, "seed": r.seed, "n_loops": len(r.records), "max": r.max,
                 "mean": r.mean, "n_correct": sum(bool(x.correct) for x in r.records),
                 "speeds_group1": list(r.speeds[0]) if r.speeds else None,
                 "speeds_group2": list(r.speeds[1]) if r.speeds else None}
                for r in items
            ],
        }
        if extra:
            summary.update(extra)
        atomic_write(out_dir / f"{stem}.json", _json_text(summary))
        written += [out_dir / f"{stem}.csv", out_dir / f"{stem}.json"]
        if verbose:
            written += _dump_trajectories(out_dir / "trajectories" / stem, items)
    return written


def _dump_trajectories(base: Path, items) -> list:
    written = []
    for r in items:
        sub = base if r.sweep_value is None else base / f"sweep_{r.sweep_value}"
        for i, rec in enumerate(r.records):
            if not rec.trajectories:
                continue
            n1 = len(rec.assignments_group1)
            for j, traj in enumerate(rec.trajectories):
                name = f"g1_e{j:02d}.csv" if j < n1 else f"g2_e{j - n1:02d}.csv"
                p = sub / f"loop_{i:03d}" / name
                atomic_write(p, trajectory_csv(traj))
                written.append(p)
    return written


def persist_cem(result: CemExperimentResult, output_dir, extra: dict | None = None) -> list:
    out_dir = Path(output_dir)
    stem = f"exp6_{result.scenario.name}"
    rows = [{k: h[k] for k in ("iteration", "max", "mean", "best_so_far")} for h in result.cem.history]
    atomic_write(out_dir / f"{stem}_cem.csv", _csv_text(["iteration", "max", "mean", "best_so_far"], rows))
    summary = {
        "experiment": "exp6",
        "scenario": result.scenario.to_dict(),
        "seed": result.seed,
        "change_times": result.cem.times,
        "n_evaluations": result.cem.n_evaluations,
        "history": result.cem.history,
        "cem_best": result.cem.best.to_dict() if result.cem.best else None,
        "final_state": result.cem.states[-1].to_dict(),
        "baseline": {"max": result.baseline.max, "mean": result.baseline.mean, "n_loops": len(result.baseline.records)},
    }
    if extra:
        summary.update(extra)
    atomic_write(out_dir / f"{stem}_cem.json", _json_text(summary))
    return [out_dir / f"{stem}_cem.csv", out_dir / f"{stem}_cem.json"] + persist_results([result.baseline], out_dir, extra)
