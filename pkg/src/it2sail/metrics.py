"""
Uncertainty-weighted performance metrics for one run.

    abs_perf  = RMSE of the wrapped bearing error
    um        = sd(wind direction) * sd(wind speed)
    bd        = max(eps, direction_value(mean dir) * speed_value(mean speed))
    rel_perf  = abs_perf / (um * bd)

Lower is better for both performance values.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from it2sail.boat import RunLog, bearing_error
from it2sail.errors import EmptyLog, EmptySeries, ZeroDenominator
from it2sail.wind import wind_stats

BD_FLOOR = 0.01


@dataclass(frozen=True)
class MetricsRecord:
    rmse: float
    abs_perf: float
    uncertainty_measure: float
    base_difficulty: float
    rel_perf: float
    mean_dir: float
    sd_dir: float
    mean_speed: float
    sd_speed: float

    def as_dict(self) -> dict:
        return asdict(self)


def rmse(log_or_errors) -> float:
    """Root mean squared bearing error.

    Accepts a :class:`RunLog` or a sequence of already-wrapped errors.
    """
    if isinstance(log_or_errors, RunLog):
        errors = bearing_error(log_or_errors.desired_bearing, log_or_errors.actual_bearing)
    else:
        errors = log_or_errors
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise EmptyLog("RMSE of an empty log")
    return math.sqrt(float(np.mean(e * e)))


def absolute_performance(log_or_errors) -> float:
    return rmse(log_or_errors)


def uncertainty_measure(log: RunLog) -> float:
    if log.n == 0:
        raise EmptyLog("uncertainty measure of an empty log")
    st = wind_stats(log.wind_dir, log.wind_speed)
    return st.sd_dir * st.sd_speed


def wind_speed_value(mean_speed: float) -> float:
    if mean_speed == 0:
        return 0.0
    if mean_speed > 14:
        return 1.0
    return 0.5


def wind_direction_value(mean_dir: float, course_bearing: float) -> float:
    """1 for a headwind along the course, 0 for a tailwind, 0.5 on the beam."""
    delta = math.radians((mean_dir - course_bearing) % 360.0)
    return (1.0 + math.cos(delta)) / 2.0


def base_difficulty(
    mean_dir: float, mean_speed: float, course_bearing: float, floor: float = BD_FLOOR
) -> float:
    raw = wind_direction_value(mean_dir, course_bearing) * wind_speed_value(mean_speed)
    return max(floor, raw)


def relative_performance(abs_perf: float, um: float, bd: float) -> float:
    den = um * bd
    if not den > 0:
        raise ZeroDenominator(f"uncertainty measure x base difficulty = {den}")
    return abs_perf / den


def normalize_series(values: Sequence[float]) -> list[float]:
    """Min-max scale to [0, 1]; a constant series maps to zeros."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise EmptySeries("cannot normalise an empty series")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return [0.0] * v.size
    out = (v - lo) / (hi - lo)
    out[v == lo] = 0.0
    out[v == hi] = 1.0
    return out.tolist()


def compute_metrics(log: RunLog, course_bearing: float, bd_floor: float = BD_FLOOR) -> MetricsRecord:
    st = wind_stats(log.wind_dir, log.wind_speed)
    perf = absolute_performance(log)
    um = st.sd_dir * st.sd_speed
    bd = base_difficulty(st.mean_dir, st.mean_speed, course_bearing, bd_floor)
    return MetricsRecord(
        rmse=perf,
        abs_perf=perf,
        uncertainty_measure=um,
        base_difficulty=bd,
        rel_perf=relative_performance(perf, um, bd),
        mean_dir=st.mean_dir,
        sd_dir=st.sd_dir,
        mean_speed=st.mean_speed,
        sd_speed=st.sd_speed,
    )
