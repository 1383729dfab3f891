"""Wind field generators: constant, power-law shear and Dryden turbulence.

Every model exposes ``sampler(run_seed)`` which returns a plain-float callable
``(t, x, y, z_abs) -> (wx, wy, wz)`` used by the integrator's inner loop.
``z_abs`` is the altitude above ground, i.e. the simulated z plus the
configured initial altitude offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.signal import lfilter

from .errors import OutOfHorizonError, ParameterError
from .seeding import make_rng

Sampler = Callable[[float, float, float, float], tuple]

# Default "strong turbulence" intensities and scale lengths (x, y, z).
STRONG_SIGMA = (2.5, 2.5, 1.5)
STRONG_SCALE_LENGTH = (200.0, 200.0, 50.0)


def _vec3(v) -> tuple:
    t = tuple(float(c) for c in v)
    if len(t) != 3:
        raise ParameterError(f"expected 3 components, got {len(t)}")
    return t


@dataclass(frozen=True)
class ConstantWind:
    velocity: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "velocity", _vec3(self.velocity))

    def sampler(self, run_seed: int = 0) -> Sampler:
        w = self.velocity
        return lambda t, x, y, z: w


@dataclass(frozen=True)
class ShearWind:
    """Power-law shear ``U(z) = U(z_ref) * (z / z_ref) ** alpha`` on the horizontal axes.

    The altitude is clamped below at ``min_altitude`` so the law stays finite
    at and below ground level.
    """

    ref_velocity: tuple
    ref_altitude: float = 1.0
    alpha: float = 0.143
    min_altitude: float = 0.1

    def __post_init__(self):
        v = _vec3(self.ref_velocity)
        object.__setattr__(self, "ref_velocity", (v[0], v[1], 0.0))
        if not self.ref_altitude > 0:
            raise ParameterError("ref_altitude must be > 0")
        if not self.alpha >= 0:
            raise ParameterError("alpha must be >= 0")
        if not self.min_altitude > 0:
            raise ParameterError("min_altitude must be > 0")

    def factor(self, z_abs: float) -> float:
        return (max(z_abs, self.min_altitude) / self.ref_altitude) ** self.alpha

    def sampler(self, run_seed: int = 0) -> Sampler:
        ux, uy, _ = self.ref_velocity
        zr, alpha, zmin = self.ref_altitude, self.alpha, self.min_altitude

        def sample(t, x, y, z):
            f = (max(z, zmin) / zr) ** alpha
            return (ux * f, uy * f, 0.0)

        return sample


@dataclass(frozen=True)
class GustSeries:
    dt: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __len__(self):
        return len(self.u)

    def as_array(self) -> np.ndarray:
        return np.stack([self.u, self.v, self.w], axis=1)


def n_samples(horizon: float, dt: float) -> int:
    return int(math.floor(horizon / dt + 1e-9)) + 1


def dryden_filter(sigma: float, length: float, airspeed: float, dt: float, order: int):
    """Tustin-discretized Dryden shaping filter, returned as ``(b, a)`` for lfilter.

    ``order=1`` is the longitudinal form ``K / (1 + (L/V) s)``; ``order=2`` the
    lateral/vertical form ``K (1 + sqrt(3) L/V s) / (1 + (L/V) s)^2``.
    """
    if not (length > 0 and airspeed > 0):
        raise ParameterError("Dryden scale length and airspeed must be > 0")
    if not dt > 0:
        raise ParameterError("dt must be > 0")
    q = 2.0 / dt
    tau = length / airspeed
    if order == 1:
        gain = sigma * math.sqrt(2.0 * length / (math.pi * airspeed))
        b = np.array([gain, gain])
        a = np.array([1.0 + tau * q, 1.0 - tau * q])
    elif order == 2:
        gain = sigma * math.sqrt(length / (math.pi * airspeed))
        zq = math.sqrt(3.0) * tau * q
        b = gain * np.array([1.0 + zq, 2.0, 1.0 - zq])
        p, m = 1.0 + tau * q, 1.0 - tau * q
        a = np.array([p * p, 2.0 * p * m, m * m])
    else:
        raise ParameterError(f"unsupported Dryden filter order {order}")
    return b / a[0], a / a[0]


def filter_poles(a: np.ndarray) -> np.ndarray:
    return np.roots(a)


@dataclass(frozen=True)
class DrydenWind:
    """Mean wind plus Dryden gusts, realized as a time series over ``horizon``.

    The gust realization is a function of ``(seed, run_seed)`` so that a
    family of environments built with distinct seeds differ, while a given
    simulation run replays exactly.
    """

    mean_wind: tuple
    sigma: tuple = STRONG_SIGMA
    scale_length: tuple = STRONG_SCALE_LENGTH
    airspeed: tuple | None = None
    dt: float = 0.1
    horizon: float = 12.0
    seed: int = 0
    burn_in_tau: float = field(default=5.0, compare=True)

    def __post_init__(self):
        mean = _vec3(self.mean_wind)
        object.__setattr__(self, "mean_wind", mean)
        object.__setattr__(self, "sigma", _vec3(self.sigma))
        object.__setattr__(self, "scale_length", _vec3(self.scale_length))
        if self.airspeed is None:
            speed = max(math.sqrt(sum(c * c for c in mean)), 1.0)
            object.__setattr__(self, "airspeed", (speed, speed, speed))
        else:
            object.__setattr__(self, "airspeed", _vec3(self.airspeed))
        if any(s < 0 for s in self.sigma):
            raise ParameterError("Dryden sigma components must be >= 0")
        if any(c <= 0 for c in self.scale_length) or any(c <= 0 for c in self.airspeed):
            raise ParameterError("Dryden scale_length and airspeed components must be > 0")
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if not self.horizon >= self.dt:
            raise ParameterError("horizon must be >= dt")

    def gusts(self, run_seed: int = 0) -> GustSeries:
        return build_dryden_series(self, run_seed)

    def sampler(self, run_seed: int = 0) -> Sampler:
        series = self.gusts(run_seed)
        mx, my, mz = self.mean_wind
        u, v, w = series.u.tolist(), series.v.tolist(), series.w.tolist()
        dt, n = self.dt, len(u)

        def sample(t, x, y, z):
            i = int(round(t / dt))
            if i < 0 or i >= n:
                raise OutOfHorizonError(f"t={t} outside Dryden horizon [0, {(n - 1) * dt}]")
            return (mx + u[i], my + v[i], mz + w[i])

        return sample


WindModel = Union[ConstantWind, ShearWind, DrydenWind]


@lru_cache(maxsize=256)
def build_dryden_series(model: DrydenWind, run_seed: int = 0) -> GustSeries:
    """Drive unit white noise through the three Dryden shaping filters.

    The noise has variance ``pi / dt`` per sample, the discrete stand-in for
    continuous white noise of intensity ``pi``; with that intensity the
    stationary gust variance equals ``sigma**2`` on every axis. Filters start
    from rest and are run through a burn-in of several correlation times
    before the kept window.
    """
    n = n_samples(model.horizon, model.dt)
    taus = [L / v for L, v in zip(model.scale_length, model.airspeed)]
    burn = int(math.ceil(model.burn_in_tau * max(taus) / model.dt))
    rng = make_rng(model.seed, run_seed)
    noise = rng.standard_normal((3, burn + n)) * math.sqrt(math.pi / model.dt)
    out = []
    for axis, order in enumerate((1, 2, 2)):
        b, a = dryden_filter(model.sigma[axis], model.scale_length[axis], model.airspeed[axis], model.dt, order)
        y = lfilter(b, a, noise[axis])[burn:]
        y.setflags(write=False)
        out.append(y)
    return GustSeries(model.dt, *out)


def wind_at(model: WindModel, t: float, position, altitude_offset: float = 0.0, run_seed: int = 0) -> np.ndarray:
    x, y, z = _vec3(position)
    return np.array(model.sampler(run_seed)(float(t), x, y, z + altitude_offset))


def model_to_dict(model: WindModel) -> dict:
    if isinstance(model, ConstantWind):
        return {"type": "constant", "velocity": list(model.velocity)}
    if isinstance(model, ShearWind):
        return {
            "type": "shear",
            "ref_velocity": list(model.ref_velocity),
            "ref_altitude": model.ref_altitude,
            "alpha": model.alpha,
            "min_altitude": model.min_altitude,
        }
    return {
        "type": "dryden",
        "mean_wind": list(model.mean_wind),
        "sigma": list(model.sigma),
        "scale_length": list(model.scale_length),
        "airspeed": list(model.airspeed),
        "dt": model.dt,
        "horizon": model.horizon,
        "seed": model.seed,
    }


def model_from_dict(d: dict) -> WindModel:
    d = dict(d)
    kind = d.pop("type", None)
    if kind == "constant":
        return ConstantWind(**d)
    if kind == "shear":
        return ShearWind(**d)
    if kind == "dryden":
        return DrydenWind(**d)
    raise ParameterError(f"unknown wind model type {kind!r}")


def speed_magnitude(model: WindModel) -> float:
    """Reference horizontal speed used for ordering environments by strength."""
    if isinstance(model, ConstantWind):
        v = model.velocity
    elif isinstance(model, ShearWind):
        v = model.ref_velocity
    else:
        v = model.mean_wind
    return math.sqrt(sum(c * c for c in v))
