"""JSON scenario configuration: parsing, field-level validation and echo.

Only the ``uav`` section is mandatory, and within it ``mass``, ``drag_coeff``
and ``cross_section``; every other value falls back to the defaults of the
corresponding dataclass.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .curiosity import ClusterSettings, EvalContext
from .dynamics import SimConfig, ThrustSchedule, UavParams
from .errors import ConfigError, ParameterError
from .experiments import CATALOG, SWEEP_SCENARIOS, ExperimentSettings, GroupSpec, ScenarioSpec, WindSettings
from .search import CemConfig, RandomSearchConfig
from .timeseries import Metric
from .wind import ShearWind, model_from_dict, model_to_dict

UAV_REQUIRED = ("mass", "drag_coeff", "cross_section")

# Worked example: thrust 40 N up, 15 N along x from 4 s, 45 N along y from 10 s.
EXAMPLE_SCHEDULE = ThrustSchedule.from_arrays([0.0, 4.0, 10.0], [40.0, 15.0, 45.0],
                                              [[0, 0, 1], [1, 0, 0], [0, 1, 0]])


def _tupled(v):
    if isinstance(v, list):
        return tuple(_tupled(x) for x in v)
    return v


def _build(cls, data, path: str, required=(), exclude=()):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path, "must be an object")
    names = {f.name for f in fields(cls)} - set(exclude)
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}.{key}", "unknown field")
    for key in required:
        if key not in data:
            raise ConfigError(f"{path}.{key}", "missing required field")
    kwargs = {k: _tupled(v) for k, v in data.items()}
    for k, v in kwargs.items():
        if isinstance(v, bool) or v is None:
            continue
        default = next(f for f in fields(cls) if f.name == k).default
        if isinstance(default, (int, float)) and not isinstance(default, bool) and not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.{k}", f"expected a number, got {type(v).__name__}")
    try:
        return cls(**kwargs)
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _scenario(d, path) -> ScenarioSpec:
    if not isinstance(d, dict) or "name" not in d:
        raise ConfigError(path, "scenario needs a name and group1/group2 objects")
    for g in ("group1", "group2"):
        if g not in d:
            raise ConfigError(f"{path}.{g}", "missing required field")
    return ScenarioSpec(str(d["name"]),
                        _build(GroupSpec, d["group1"], f"{path}.group1", required=("family",)),
                        _build(GroupSpec, d["group2"], f"{path}.group2", required=("family",)))


@dataclass
class ExperimentOptions:
    n_env_windspeed: int = 5
    n_env_sweep: int = 10
    n_env_direction: int = 5
    n_env_cem: int = 5
    range_sizes: tuple = (10, 9, 8, 7, 6, 5, 4, 3)
    count_sizes: tuple = (10, 8, 6, 4, 3)
    change_counts: tuple = (0, 2, 4, 6, 8, 10, 12)


@dataclass
class Config:
    seed: int = 0
    uav: UavParams = field(default_factory=UavParams)
    sim: SimConfig = field(default_factory=SimConfig)
    cluster: ClusterSettings = field(default_factory=ClusterSettings)
    search: RandomSearchConfig = field(default_factory=RandomSearchConfig)
    cem: CemConfig = field(default_factory=CemConfig)
    winds: WindSettings = field(default_factory=WindSettings)
    experiments: ExperimentOptions = field(default_factory=ExperimentOptions)
    scenarios: tuple = CATALOG
    sweep_scenarios: tuple = SWEEP_SCENARIOS
    schedule: ThrustSchedule = EXAMPLE_SCHEDULE
    wind: object = ShearWind((2.1, 10.1, 0.0))

    def context(self) -> EvalContext:
        return EvalContext(self.uav, self.sim, self.cluster)

    def settings(self, jobs: int = 1, keep_trajectories: bool = False) -> ExperimentSettings:
        e = self.experiments
        return ExperimentSettings(
            ctx=self.context(), winds=self.winds, search=self.search, cem=self.cem, seed=self.seed, jobs=jobs,
            keep_trajectories=keep_trajectories, n_env_windspeed=e.n_env_windspeed, n_env_sweep=e.n_env_sweep,
            n_env_direction=e.n_env_direction, n_env_cem=e.n_env_cem, range_sizes=e.range_sizes,
            count_sizes=e.count_sizes, change_counts=e.change_counts)

    def to_dict(self) -> dict:
        def plain(obj):
            d = dataclasses.asdict(obj)
            return json.loads(json.dumps(d))
        cluster = {"metric": self.cluster.metric.name, "gamma": self.cluster.metric.gamma,
                   "n_init": self.cluster.n_init, "max_iters": self.cluster.max_iters,
                   "barycenter_iters": self.cluster.barycenter_iters}
        search = plain(self.search)
        search.pop("seed")
        cem = plain(self.cem)
        cem.pop("seed")
        return {
            "seed": self.seed,
            "uav": plain(self.uav),
            "sim": plain(self.sim),
            "cluster": cluster,
            "search": search,
            "cem": cem,
            "winds": plain(self.winds),
            "experiments": plain(self.experiments),
            "scenarios": [s.to_dict() for s in self.scenarios],
            "sweep_scenarios": [s.to_dict() for s in self.sweep_scenarios],
            "simulate": {"schedule": self.schedule.to_dict(), "wind": model_to_dict(self.wind)},
        }


SECTIONS = ("seed", "uav", "sim", "cluster", "search", "cem", "winds", "experiments", "scenarios",
            "sweep_scenarios", "simulate")


def parse_config(data: dict, seed_override: int | None = None) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    for key in data:
        if key not in SECTIONS:
            raise ConfigError(key, "unknown section")
    if "uav" not in data:
        raise ConfigError("uav", "missing required section")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "must be an integer")
    if seed_override is not None:
        seed = seed_override

    cfg = Config(seed=seed)
    cfg.uav = _build(UavParams, data["uav"], "uav", required=UAV_REQUIRED)
    cfg.sim = _build(SimConfig, data.get("sim"), "sim")

    cl = dict(data.get("cluster") or {})
    for key in cl:
        if key not in ("metric", "gamma", "n_init", "max_iters", "barycenter_iters"):
            raise ConfigError(f"cluster.{key}", "unknown field")
    try:
        metric = Metric(cl.pop("metric", "dtw"), float(cl.pop("gamma", 1.0)))
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError("cluster.metric", str(exc)) from exc
    cfg.cluster = _build(ClusterSettings, cl, "cluster")
    cfg.cluster = dataclasses.replace(cfg.cluster, metric=metric)

    cfg.search = _build(RandomSearchConfig, data.get("search"), "search", exclude=("seed",))
    cfg.cem = _build(CemConfig, data.get("cem"), "cem", exclude=("seed",))
    cfg.winds = _build(WindSettings, data.get("winds"), "winds")
    cfg.experiments = _build(ExperimentOptions, data.get("experiments"), "experiments")
    if "scenarios" in data:
        cfg.scenarios = tuple(_scenario(s, f"scenarios[{i}]") for i, s in enumerate(data["scenarios"]))
    if "sweep_scenarios" in data:
        cfg.sweep_scenarios = tuple(_scenario(s, f"sweep_scenarios[{i}]")
                                    for i, s in enumerate(data["sweep_scenarios"]))

    sim_opts = data.get("simulate") or {}
    for key in sim_opts:
        if key not in ("schedule", "wind"):
            raise ConfigError(f"simulate.{key}", "unknown field")
    if "schedule" in sim_opts:
        try:
            cfg.schedule = ThrustSchedule.from_dict(sim_opts["schedule"], max_magnitude=cfg.search.max_magnitude)
        except (KeyError, TypeError, ParameterError, ValueError) as exc:
            raise ConfigError("simulate.schedule", str(exc)) from exc
    if "wind" in sim_opts:
        try:
            cfg.wind = model_from_dict(sim_opts["wind"])
        except (TypeError, ParameterError, ValueError) as exc:
            raise ConfigError("simulate.wind", str(exc)) from exc
    return cfg


def load_config(path, seed_override: int | None = None) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return parse_config(data, seed_override)


def default_config_dict() -> dict:
    return Config().to_dict()
