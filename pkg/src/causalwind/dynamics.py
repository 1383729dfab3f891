"""Point-mass UAV under scheduled thrust, quadratic drag and gravity.

Integration is semi-implicit Euler: the ground-frame velocity is updated
with the current acceleration first, then the position advances with the
new velocity.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, ScheduleError, SimulationDiverged
from .wind import ConstantWind, WindModel, n_samples

DEFAULT_MAX_THRUST = 50.0
# Grid times like 3*0.1 can land a hair below a change time; treat that as reached.
_TIME_EPS = 1e-9


def _vec3(v) -> tuple:
    t = tuple(float(c) for c in v)
    if len(t) != 3:
        raise ParameterError(f"expected 3 components, got {len(t)}")
    return t


@dataclass(frozen=True)
class UavParams:
    mass: float = 2.0
    drag_coeff: float = 0.1
    cross_section: float = 0.01
    air_density: float = 1.225
    gravity_accel: float = 9.81

    def __post_init__(self):
        if not self.mass > 0:
            raise ParameterError("mass must be > 0")
        if not self.drag_coeff >= 0:
            raise ParameterError("drag_coeff must be >= 0")
        if not self.cross_section >= 0:
            raise ParameterError("cross_section must be >= 0")
        if not self.air_density > 0:
            raise ParameterError("air_density must be > 0")

    @property
    def drag_factor(self) -> float:
        """``0.5 * rho * C_D * S``; drag is ``-drag_factor * |v| * v``."""
        return 0.5 * self.air_density * self.drag_coeff * self.cross_section


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    total_time: float = 12.0
    initial_position: tuple = (0.0, 0.0, 0.0)
    initial_velocity: tuple = (0.0, 0.0, 0.0)
    initial_altitude_offset: float = 100.0
    relative_velocity_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "initial_position", _vec3(self.initial_position))
        object.__setattr__(self, "initial_velocity", _vec3(self.initial_velocity))
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if not self.total_time >= self.dt:
            raise ParameterError("total_time must be >= dt")
        if self.total_time / self.dt > 2**31:
            raise ParameterError("total_time/dt too large")
        if self.relative_velocity_sign not in (1, -1):
            raise ParameterError("relative_velocity_sign must be +1 or -1")

    @property
    def n_samples(self) -> int:
        return n_samples(self.total_time, self.dt)


@dataclass(frozen=True)
class ThrustSegment:
    start_time: float
    force: tuple

    def __post_init__(self):
        object.__setattr__(self, "force", _vec3(self.force))


@dataclass(frozen=True)
class ThrustSchedule:
    """Piecewise-constant thrust; segment ``i`` applies on ``[start_i, start_{i+1})``."""

    segments: tuple
    max_magnitude: float = field(default=DEFAULT_MAX_THRUST, compare=False)

    def __post_init__(self):
        segs = tuple(s if isinstance(s, ThrustSegment) else ThrustSegment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ScheduleError("thrust schedule is empty")
        if segs[0].start_time != 0:
            raise ScheduleError("first thrust segment must start at t=0")
        for prev, cur in zip(segs, segs[1:]):
            if not cur.start_time > prev.start_time:
                raise ScheduleError("segment start times must be strictly increasing")
        for s in segs:
            mag = math.sqrt(sum(c * c for c in s.force))
            if mag > self.max_magnitude * (1 + 1e-12):
                raise ScheduleError(f"thrust magnitude {mag:.6g} N exceeds {self.max_magnitude} N")
        object.__setattr__(self, "_starts", [s.start_time for s in segs])

    @classmethod
    def from_arrays(cls, times: Sequence[float], magnitudes: Sequence[float], directions, max_magnitude=DEFAULT_MAX_THRUST):
        dirs = np.asarray(directions, dtype=float).reshape(-1, 3)
        segs = [
            ThrustSegment(float(t), tuple(float(m) * d for d in dvec))
            for t, m, dvec in zip(times, magnitudes, dirs)
        ]
        return cls(tuple(segs), max_magnitude=max_magnitude)

    @property
    def times(self) -> list:
        return list(self._starts)

    def force_at(self, t: float) -> tuple:
        return self.segments[bisect_right(self._starts, t) - 1].force

    def to_dict(self) -> dict:
        return {
            "times": [s.start_time for s in self.segments],
            "forces": [list(s.force) for s in self.segments],
        }

    @classmethod
    def from_dict(cls, d: dict, max_magnitude=DEFAULT_MAX_THRUST) -> "ThrustSchedule":
        return cls(tuple(ThrustSegment(t, f) for t, f in zip(d["times"], d["forces"])), max_magnitude=max_magnitude)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray | None = None

    def __len__(self):
        return len(self.times)


def thrust_at(schedule: ThrustSchedule, t: float) -> np.ndarray:
    if t < 0:
        raise ParameterError("t must be >= 0")
    return np.array(schedule.force_at(t))


def _net_force(thrust, vax, vay, vaz, k, weight):
    speed = math.sqrt(vax * vax + vay * vay + vaz * vaz)
    return (
        thrust[0] - k * speed * vax,
        thrust[1] - k * speed * vay,
        thrust[2] - k * speed * vaz + weight,
    )


def net_force(params: UavParams, thrust, v_air) -> np.ndarray:
    """Thrust plus quadratic drag opposing the relative airflow plus weight."""
    vx, vy, vz = _vec3(v_air)
    return np.array(_net_force(_vec3(thrust), vx, vy, vz, params.drag_factor, -params.gravity_accel * params.mass))


def _advance(px, py, pz, vx, vy, vz, t, dt, thrust, wind_fn, sign, z_offset, k, weight, inv_m):
    wx, wy, wz = wind_fn(t, px, py, pz + z_offset)
    fx, fy, fz = _net_force(thrust, vx + sign * wx, vy + sign * wy, vz + sign * wz, k, weight)
    vx += fx * inv_m * dt
    vy += fy * inv_m * dt
    vz += fz * inv_m * dt
    return px + vx * dt, py + vy * dt, pz + vz * dt, vx, vy, vz


def step(position, v_ground, params: UavParams, schedule: ThrustSchedule, wind: WindModel, t: float, dt: float,
         config: SimConfig | None = None, seed: int = 0):
    """Advance one time step; returns ``(position, v_ground)`` as arrays."""
    if not dt > 0:
        raise ParameterError("dt must be > 0")
    config = config or SimConfig()
    px, py, pz = _vec3(position)
    vx, vy, vz = _vec3(v_ground)
    out = _advance(px, py, pz, vx, vy, vz, t, dt, schedule.force_at(t + _TIME_EPS), wind.sampler(seed),
                   config.relative_velocity_sign, config.initial_altitude_offset,
                   params.drag_factor, -params.gravity_accel * params.mass, 1.0 / params.mass)
    return np.array(out[:3]), np.array(out[3:])


def simulate(params: UavParams, schedule: ThrustSchedule, wind: WindModel | None = None,
             config: SimConfig | None = None, seed: int = 0, keep_velocities: bool = False) -> Trajectory:
    """Integrate from the configured initial state over ``total_time``.

    Returns ``floor(total_time/dt) + 1`` samples including the initial state.
    ``seed`` only affects stochastic (Dryden) wind.
    """
    wind = wind if wind is not None else ConstantWind()
    config = config or SimConfig()
    n = config.n_samples
    dt = config.dt
    wind_fn = wind.sampler(seed)
    sign, z_off = config.relative_velocity_sign, config.initial_altitude_offset
    k, weight, inv_m = params.drag_factor, -params.gravity_accel * params.mass, 1.0 / params.mass

    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    px, py, pz = config.initial_position
    vx, vy, vz = config.initial_velocity
    pos[0] = (px, py, pz)
    vel[0] = (vx, vy, vz)
    for i in range(1, n):
        t = (i - 1) * dt
        px, py, pz, vx, vy, vz = _advance(px, py, pz, vx, vy, vz, t, dt, schedule.force_at(t + _TIME_EPS), wind_fn,
                                          sign, z_off, k, weight, inv_m)
        if not all(math.isfinite(c) for c in (px, py, pz, vx, vy, vz)):
            raise SimulationDiverged(i)
        pos[i] = (px, py, pz)
        vel[i] = (vx, vy, vz)
    times = np.arange(n) * dt
    for a in (times, pos, vel):
        a.setflags(write=False)
    return Trajectory(times, pos, vel if keep_velocities else None)
