"""Curiosity-driven discrimination of wind conditions from UAV trajectories."""

from .curiosity import EnvironmentGroup, EvalContext, LoopRecord, evaluate_schedule
from .dynamics import SimConfig, ThrustSchedule, UavParams, simulate
from .search import CemConfig, RandomSearchConfig, cem_run, random_search
from .timeseries import Metric, dtw, kmeans, silhouette, soft_dtw
from .wind import ConstantWind, DrydenWind, ShearWind

__all__ = [
    "ConstantWind", "ShearWind", "DrydenWind",
    "UavParams", "SimConfig", "ThrustSchedule", "simulate",
    "Metric", "dtw", "soft_dtw", "kmeans", "silhouette",
    "EnvironmentGroup", "EvalContext", "LoopRecord", "evaluate_schedule",
    "RandomSearchConfig", "CemConfig", "random_search", "cem_run",
]
__version__ = "0.1.0"
