"""Thrust-schedule search: random exploration and the cross-entropy method."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curiosity import EnvironmentGroup, EvalContext, LoopRecord, evaluate_schedule, failed_record
from .dynamics import ThrustSchedule
from .errors import ParameterError
from .seeding import derive_seed, make_rng

AXIS_DIRECTIONS = np.array([
    [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0], [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0], [0.0, 0.0, -1.0],
])


def pmap(fn, items, jobs: int = 1):
    """Order-preserving map, optionally over worker processes."""
    items = list(items)
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, *zip(*items)))


def _safe_evaluate(schedule, group1, group2, ctx, seed, keep_trajectories=False):
    try:
        return evaluate_schedule(schedule, group1, group2, ctx, seed, keep_trajectories)
    except (ArithmeticError, ValueError) as exc:
        return failed_record(schedule, group1, group2, exc)


@dataclass(frozen=True)
class RandomSearchConfig:
    n_loops: int = 50
    n_changes: int = 6
    max_magnitude: float = 50.0
    direction_mode: str = "axis_aligned"
    seed: int = 0

    def __post_init__(self):
        if self.n_loops < 1:
            raise ParameterError("n_loops must be >= 1")
        if self.n_changes < 0:
            raise ParameterError("n_changes must be >= 0")
        if not self.max_magnitude > 0:
            raise ParameterError("max_magnitude must be > 0")
        if self.direction_mode not in ("axis_aligned", "unit_sphere"):
            raise ParameterError(f"unknown direction_mode {self.direction_mode!r}")


def sample_change_times(rng: np.random.Generator, n_changes: int, total_time: float) -> list:
    while True:
        t = np.sort(rng.uniform(0.0, total_time, n_changes))
        if n_changes == 0 or (t[0] > 0 and np.all(np.diff(t) > 0)):
            return [0.0] + t.tolist()


def sample_random_schedule(cfg: RandomSearchConfig, rng: np.random.Generator, total_time: float = 12.0) -> ThrustSchedule:
    times = sample_change_times(rng, cfg.n_changes, total_time)
    n = len(times)
    mags = rng.uniform(0.0, cfg.max_magnitude, n)
    if cfg.direction_mode == "axis_aligned":
        dirs = AXIS_DIRECTIONS[rng.integers(0, len(AXIS_DIRECTIONS), n)]
    else:
        dirs = np.empty((n, 3))
        for i in range(n):
            v = rng.standard_normal(3)
            while not np.linalg.norm(v) > 0:
                v = rng.standard_normal(3)
            dirs[i] = v / np.linalg.norm(v)
    return ThrustSchedule.from_arrays(times, mags, dirs, max_magnitude=cfg.max_magnitude)


@dataclass
class SearchResult:
    records: list
    max: float
    mean: float


def summarize(scores) -> tuple:
    scores = np.asarray(scores, dtype=float)
    return float(scores.max()), float(scores.mean())


def random_search(group1: EnvironmentGroup, group2: EnvironmentGroup, cfg: RandomSearchConfig,
                  ctx: EvalContext = EvalContext(), jobs: int = 1, keep_trajectories: bool = False) -> SearchResult:
    """Evaluate ``n_loops`` independent random schedules.

    Loop ``i`` draws its schedule from a stream seeded by ``(seed, i)`` and is
    evaluated with seed ``derive_seed(seed, i, 1)``; failed loops score 0.
    """
    tasks = []
    for i in range(cfg.n_loops):
        sched = sample_random_schedule(cfg, make_rng(cfg.seed, i), ctx.sim.total_time)
        tasks.append((sched, group1, group2, ctx, derive_seed(cfg.seed, i, 1), keep_trajectories))
    records = pmap(_safe_evaluate, tasks, jobs)
    mx, mean = summarize([r.score for r in records])
    return SearchResult(records, mx, mean)


@dataclass(frozen=True)
class CemConfig:
    n_samples: int = 30
    n_elite: int = 4
    max_iterations: int = 20
    stall_patience: int = 5
    min_sigma: float = 0.1
    n_changes: int = 6
    max_magnitude: float = 50.0
    mu_mag: float = 25.0
    sigma_mag: float = 50.0
    mu_dir: float = 0.0
    sigma_dir: float = 0.33
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n_elite <= self.n_samples:
            raise ParameterError("need 1 <= n_elite <= n_samples")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if self.sigma_mag < 0 or self.sigma_dir < 0:
            raise ParameterError("initial sigmas must be >= 0")


@dataclass(frozen=True)
class CemState:
    """Per-segment Gaussian over magnitude and direction components.

    Variances are stored directly so the elite-variance update is exact.
    """

    mu_mag: np.ndarray
    var_mag: np.ndarray
    mu_dir: np.ndarray
    var_dir: np.ndarray
    iteration: int = 0

    @property
    def sigma_mag(self) -> np.ndarray:
        return np.sqrt(self.var_mag)

    @property
    def sigma_dir(self) -> np.ndarray:
        return np.sqrt(self.var_dir)

    @classmethod
    def initial(cls, cfg: CemConfig) -> "CemState":
        s = cfg.n_changes + 1
        return cls(np.full(s, float(cfg.mu_mag)), np.full(s, float(cfg.sigma_mag) ** 2),
                   np.full((s, 3), float(cfg.mu_dir)), np.full((s, 3), float(cfg.sigma_dir) ** 2))

    def to_dict(self) -> dict:
        return {"iteration": self.iteration, "mu_mag": self.mu_mag.tolist(), "sigma_mag": self.sigma_mag.tolist(),
                "mu_dir": self.mu_dir.tolist(), "sigma_dir": self.sigma_dir.tolist()}


@dataclass
class CemSample:
    schedule: ThrustSchedule
    magnitudes: np.ndarray
    directions: np.ndarray


def cem_sample(state: CemState, cfg: CemConfig, rng: np.random.Generator, times) -> list:
    """Draw ``n_samples`` schedules on the fixed change ``times``.

    Magnitudes are clamped to ``[0, max_magnitude]``; directions are drawn
    per component and normalized, redrawing exact zero vectors.
    """
    s = len(times)
    if state.mu_mag.shape != (s,):
        raise ParameterError("state and change times disagree on the number of segments")
    sig_mag, sig_dir = state.sigma_mag, state.sigma_dir
    if np.any(np.all(sig_dir == 0, axis=1) & np.all(state.mu_dir == 0, axis=1)):
        raise ParameterError("direction distribution is degenerate at the zero vector")
    out = []
    for _ in range(cfg.n_samples):
        mags = np.clip(rng.normal(state.mu_mag, sig_mag), 0.0, cfg.max_magnitude)
        dirs = np.empty((s, 3))
        for i in range(s):
            v = rng.normal(state.mu_dir[i], sig_dir[i])
            while not np.linalg.norm(v) > 0:
                v = rng.normal(state.mu_dir[i], sig_dir[i])
            dirs[i] = v / np.linalg.norm(v)
        out.append(CemSample(ThrustSchedule.from_arrays(times, mags, dirs, cfg.max_magnitude), mags, dirs))
    return out


def elite_indices(scores, n_elite: int) -> np.ndarray:
    """Top ``n_elite`` by score; equal scores keep the lower sample index first."""
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")[:n_elite]


def cem_update(state: CemState, samples, scores, cfg: CemConfig) -> CemState:
    """Refit mean and population variance (divide by N_e) to the elite samples."""
    if len(samples) != len(scores):
        raise ParameterError("samples and scores differ in length")
    idx = elite_indices(scores, cfg.n_elite)
    mags = np.stack([samples[i].magnitudes for i in idx])
    dirs = np.stack([samples[i].directions for i in idx])
    return CemState(mags.mean(axis=0), mags.var(axis=0), dirs.mean(axis=0), dirs.var(axis=0), state.iteration + 1)


@dataclass
class CemResult:
    history: list            # dicts: iteration, max, mean, best_so_far
    best: LoopRecord | None
    states: list
    times: list
    n_evaluations: int
    records: list = field(default_factory=list, repr=False)


def cem_run(group1: EnvironmentGroup, group2: EnvironmentGroup, cfg: CemConfig, ctx: EvalContext = EvalContext(),
            jobs: int = 1, state: CemState | None = None) -> CemResult:
    """Sample, evaluate and refit until the iteration cap, sigma collapse or a stall."""
    times = sample_change_times(make_rng(cfg.seed), cfg.n_changes, ctx.sim.total_time)
    state = state if state is not None else CemState.initial(cfg)
    history, states, all_records = [], [state], []
    best, best_score, stall = None, -np.inf, 0
    for it in range(cfg.max_iterations):
        samples = cem_sample(state, cfg, make_rng(cfg.seed, it, 0), times)
        tasks = [(s.schedule, group1, group2, ctx, derive_seed(cfg.seed, it, k)) for k, s in enumerate(samples)]
        records = pmap(_safe_evaluate, tasks, jobs)
        all_records.append(records)
        scores = [r.score for r in records]
        top = int(elite_indices(scores, 1)[0])
        if scores[top] > best_score:
            best, best_score, stall = records[top], scores[top], 0
        else:
            stall += 1
        mx, mean = summarize(scores)
        history.append({"iteration": it + 1, "max": mx, "mean": mean, "best_so_far": float(best_score)})
        state = cem_update(state, samples, scores, cfg)
        states.append(state)
        if stall >= cfg.stall_patience or np.all(state.sigma_mag < cfg.min_sigma):
            break
    n_eval = len(history) * cfg.n_samples
    return CemResult(history, best, states, times, n_eval, all_records)


def matched_random_config(cfg: CemConfig, n_evaluations: int, direction_mode: str = "axis_aligned",
                          seed: int | None = None) -> RandomSearchConfig:
    return RandomSearchConfig(n_loops=n_evaluations, n_changes=cfg.n_changes, max_magnitude=cfg.max_magnitude,
                              direction_mode=direction_mode, seed=cfg.seed if seed is None else seed)
