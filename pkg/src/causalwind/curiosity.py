"""Score how well one thrust schedule separates two groups of wind environments."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SimConfig, ThrustSchedule, UavParams, simulate
from .errors import ParameterError
from .timeseries import Metric, kmeans, pairwise_distances, silhouette_from_distances
from .wind import ConstantWind, DrydenWind, ShearWind


@dataclass(frozen=True)
class EnvironmentGroup:
    label: str
    environments: tuple

    def __post_init__(self):
        envs = tuple(self.environments)
        object.__setattr__(self, "environments", envs)
        if not envs:
            raise ParameterError(f"environment group {self.label!r} is empty")
        if len({type(e) for e in envs}) != 1 or not isinstance(envs[0], (ConstantWind, ShearWind, DrydenWind)):
            raise ParameterError(f"environment group {self.label!r} mixes wind model families")

    def __len__(self):
        return len(self.environments)


@dataclass(frozen=True)
class ClusterSettings:
    metric: Metric = Metric()
    n_init: int = 5
    max_iters: int = 50
    barycenter_iters: int = 10


@dataclass(frozen=True)
class EvalContext:
    """Everything except the schedule and seed that a loop evaluation needs."""

    params: UavParams = UavParams()
    sim: SimConfig = SimConfig()
    cluster: ClusterSettings = ClusterSettings()


@dataclass
class LoopRecord:
    schedule: ThrustSchedule | None
    assignments_group1: list
    assignments_group2: list
    correct: bool
    silhouette_raw: float
    score: float
    degenerate: bool = False
    error: str | None = None
    trajectories: list | None = field(default=None, repr=False, compare=False)

    CSV_FIELDS = ("schedule_times", "schedule_forces", "assignments_group1", "assignments_group2",
                  "correct", "silhouette_raw", "score", "degenerate", "error")

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule.to_dict() if self.schedule is not None else None,
            "assignments_group1": [int(a) for a in self.assignments_group1],
            "assignments_group2": [int(a) for a in self.assignments_group2],
            "correct": bool(self.correct),
            "silhouette_raw": float(self.silhouette_raw),
            "score": float(self.score),
            "degenerate": bool(self.degenerate),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoopRecord":
        sched = ThrustSchedule.from_dict(d["schedule"], max_magnitude=float("inf")) if d.get("schedule") else None
        return cls(sched, list(d["assignments_group1"]), list(d["assignments_group2"]), bool(d["correct"]),
                   float(d["silhouette_raw"]), float(d["score"]), bool(d.get("degenerate", False)), d.get("error"))

    def csv_row(self) -> dict:
        sched = self.schedule.to_dict() if self.schedule is not None else {"times": [], "forces": []}
        return {
            "schedule_times": " ".join(repr(float(t)) for t in sched["times"]),
            "schedule_forces": json.dumps(sched["forces"]),
            "assignments_group1": " ".join(str(int(a)) for a in self.assignments_group1),
            "assignments_group2": " ".join(str(int(a)) for a in self.assignments_group2),
            "correct": int(bool(self.correct)),
            "silhouette_raw": repr(float(self.silhouette_raw)),
            "score": repr(float(self.score)),
            "degenerate": int(bool(self.degenerate)),
            "error": self.error or "",
        }


def failed_record(schedule, group1, group2, exc: Exception) -> LoopRecord:
    return LoopRecord(schedule, [0] * len(group1), [0] * len(group2), False, 0.0, 0.0,
                      error=f"{type(exc).__name__}: {exc}")


def separates(labels1, labels2) -> bool:
    """True when each group is pure and the two groups carry different labels."""
    s1, s2 = set(int(a) for a in labels1), set(int(a) for a in labels2)
    return len(s1) == 1 and len(s2) == 1 and s1 != s2


def curiosity_score(correct: bool, silhouette_raw: float) -> float:
    if not correct:
        return 0.0
    return 100.0 * min(max(silhouette_raw, 0.0), 1.0)


def evaluate_schedule(schedule: ThrustSchedule, group1: EnvironmentGroup, group2: EnvironmentGroup,
                      ctx: EvalContext = EvalContext(), seed: int = 0, keep_trajectories: bool = False) -> LoopRecord:
    """Fly ``schedule`` in every environment, cluster with k=2 and score the split.

    Trajectories are clustered in a canonical (content-sorted) order so the
    outcome does not depend on which group is listed first.
    """
    envs = list(group1.environments) + list(group2.environments)
    trajs = [simulate(ctx.params, schedule, env, ctx.sim, seed=seed) for env in envs]
    series = [t.positions for t in trajs]
    n1 = len(group1)
    kept = trajs if keep_trajectories else None

    order = sorted(range(len(series)), key=lambda i: series[i].tobytes())
    canon = [series[i] for i in order]
    if all(np.array_equal(canon[0], s) for s in canon[1:]):
        return LoopRecord(schedule, [0] * n1, [0] * len(group2), False, 0.0, 0.0, degenerate=True, trajectories=kept)

    cs = ctx.cluster
    model = kmeans(canon, 2, cs.metric, n_init=cs.n_init, max_iters=cs.max_iters, seed=seed,
                   barycenter_iters=cs.barycenter_iters)
    labels = np.empty(len(series), dtype=int)
    labels[order] = model.assignments
    if len(set(labels.tolist())) < 2:
        return LoopRecord(schedule, labels[:n1].tolist(), labels[n1:].tolist(), False, 0.0, 0.0,
                          degenerate=True, trajectories=kept)

    sil = silhouette_from_distances(pairwise_distances(canon, cs.metric), model.assignments)
    correct = separates(labels[:n1], labels[n1:])
    return LoopRecord(schedule, labels[:n1].tolist(), labels[n1:].tolist(), correct, sil,
                      curiosity_score(correct, sil), trajectories=kept)
