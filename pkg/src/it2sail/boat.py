"""
Kinematic sailing boat and closed-loop course simulation.

Conventions: x is east and y is north, in metres. Headings and bearings are
compass degrees (0 = north, clockwise positive). Wind direction is the
direction the wind blows *from*.

The boat turns at ``turn_gain * rudder`` degrees per second and moves at the
wind speed scaled by a polar table of the true wind angle. Sail trim is
implicit in the polar.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from it2sail.errors import CoincidentPoint, InvalidOffset
from it2sail.fuzzy import RuleBase
from it2sail.fuzzy_array import BatchController
from it2sail.wind import WindConfig, WindLog, WindProcess

COURSE_OFFSETS = (25, 50, 100)
LEG_LENGTH = 250.0
DEFAULT_POLAR = ((0.0, 0.0), (30.0, 0.0), (90.0, 0.5), (180.0, 0.4))

RUNLOG_COLUMNS = (
    "t", "desired_bearing", "actual_bearing", "wind_dir", "wind_speed",
    "x", "y", "heading", "speed", "rudder",
)


class BoatState(NamedTuple):
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class Course:
    start: tuple[float, float]
    waypoints: tuple[tuple[float, float], ...]
    vertical_offset: float
    initial_heading: float = 90.0

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("a course needs at least one waypoint")

    @property
    def bearing(self) -> float:
        """Start-to-finish bearing, used as the reference for wind difficulty."""
        return desired_bearing(BoatState(*self.start, 0.0, 0.0), self.waypoints[-1])

    def mirrored(self) -> Course:
        """Reflection about the east-west axis."""
        return Course(
            (self.start[0], -self.start[1]),
            tuple((x, -y) for x, y in self.waypoints),
            -self.vertical_offset,
            (180.0 - self.initial_heading) % 360.0,
        )


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.1
    timeout: float = 600.0
    arrival_radius: float = 5.0
    rudder_limit: float = 45.0
    turn_gain: float = 0.5
    polar: tuple[tuple[float, float], ...] = DEFAULT_POLAR
    two_leg: bool = True
    wind_jitter_dir: float = 1.0
    wind_jitter_speed: float = 0.25
    # controller inputs are error_gain * error and derror_gain * delta error;
    # 3 maps +-20 deg of bearing error onto the +-60 universe, 10 = 1/dt makes
    # delta error a rate in deg/s
    error_gain: float = 3.0
    derror_gain: float = 10.0

    def __post_init__(self):
        if self.dt <= 0 or self.timeout <= 0 or self.arrival_radius <= 0:
            raise ValueError("dt, timeout and arrival_radius must be positive")
        angles = [a for a, _ in self.polar]
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("polar angles must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for _, v in self.polar):
            raise ValueError("polar values must lie in [0, 1]")

    @property
    def max_steps(self) -> int:
        return max(1, math.ceil(self.timeout / self.dt - 1e-9))

    def with_overrides(self, **kw) -> SimParams:
        return replace(self, **kw)


def course_from_offset(offset: float, two_leg: bool = True) -> Course:
    """Start at the origin heading east; turn waypoint at (250, offset).

    The two-leg course continues to (500, 0).
    """
    if offset not in COURSE_OFFSETS:
        raise InvalidOffset(f"offset must be one of {COURSE_OFFSETS}, got {offset!r}")
    turn = (LEG_LENGTH, float(offset))
    waypoints = (turn, (2 * LEG_LENGTH, 0.0)) if two_leg else (turn,)
    return Course((0.0, 0.0), waypoints, float(offset))


def turn_angle(course: Course) -> float:
    """Heading change needed at the start to face the first waypoint."""
    wx, wy = course.waypoints[0]
    return math.degrees(math.atan2(wy - course.start[1], wx - course.start[0]))


def desired_bearing(state: BoatState, wp: Sequence[float]) -> float:
    dx, dy = wp[0] - state.x, wp[1] - state.y
    if dx == 0 and dy == 0:
        raise CoincidentPoint(f"boat is exactly on waypoint {tuple(wp)}")
    return math.degrees(math.atan2(dx, dy)) % 360.0


def bearing_error(desired, actual):
    """Signed smallest difference desired - actual in (-180, 180].

    Positive means the boat should turn clockwise. Works on floats or arrays.
    """
    d = np.mod(np.subtract(desired, actual), 360.0)
    d = np.where(d > 180.0, d - 360.0, d)
    return float(d) if np.ndim(d) == 0 else d


def _wrap180(a):
    d = np.mod(a, 360.0)
    return np.where(d > 180.0, d - 360.0, d)


def polar_speed(apparent_angle, wind_speed, polar=DEFAULT_POLAR):
    """Boat speed from the true wind angle off the bow (0..180 degrees)."""
    angles, values = zip(*polar)
    out = np.multiply(wind_speed, np.interp(apparent_angle, angles, values))
    return float(out) if np.ndim(out) == 0 else out


def _advance(x, y, heading, speed, rudder, wind_dir, wind_speed, params, polar):
    heading = np.mod(heading + params.turn_gain * rudder * params.dt, 360.0)
    angle = np.abs(_wrap180(wind_dir - heading))
    speed = wind_speed * np.interp(angle, *polar)
    h = np.radians(heading)
    return x + speed * params.dt * np.sin(h), y + speed * params.dt * np.cos(h), heading, speed


def step(state: BoatState, rudder: float, wind, params: SimParams) -> BoatState:
    """One kinematic step; ``wind`` is anything with ``direction`` and ``speed``."""
    polar = tuple(zip(*params.polar))
    x, y, h, v = _advance(
        state.x, state.y, state.heading, state.speed, rudder,
        wind.direction, wind.speed, params, polar,
    )
    return BoatState(float(x), float(y), float(h), float(v))


@dataclass
class RunLog:
    """Per-step record of one run. Columns are numpy arrays of length ``n``."""

    t: np.ndarray
    desired_bearing: np.ndarray
    actual_bearing: np.ndarray
    wind_dir: np.ndarray
    wind_speed: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    rudder: np.ndarray
    outcome: str = "Completed"
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def error(self) -> np.ndarray:
        return bearing_error(self.desired_bearing, self.actual_bearing)

    def columns(self):
        return [getattr(self, c) for c in RUNLOG_COLUMNS]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RUNLOG_COLUMNS)
            for row in zip(*(c.tolist() for c in self.columns())):
                w.writerow([repr(v) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path, outcome: str = "Completed") -> RunLog:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        if tuple(header) != RUNLOG_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(*(data[:, i].copy() for i in range(len(RUNLOG_COLUMNS))), outcome=outcome)


def simulate_batch(
    controller: BatchController | Sequence[RuleBase],
    course: Course,
    winds: Sequence[WindLog],
    params: SimParams,
) -> list[RunLog]:
    """Run B boats in lockstep on one course, each with its own controller row
    and pre-drawn wind (at least ``params.max_steps`` samples each).

    Boats that finish drop out of the batch; the rest keep stepping. Each
    row's trajectory depends only on its own controller and wind.
    """
    if not isinstance(controller, BatchController):
        controller = BatchController(controller)
    b = controller.size
    if len(winds) != b:
        raise ValueError(f"{len(winds)} wind logs for {b} controllers")
    n_max = params.max_steps
    if any(len(w) < n_max for w in winds):
        raise ValueError(f"each wind log needs at least {n_max} samples")
    polar = tuple(np.asarray(c, dtype=float) for c in zip(*params.polar))
    wpts = np.asarray(course.waypoints, dtype=float)
    n_wp = len(wpts)
    r2 = params.arrival_radius ** 2

    w_dir = np.stack([w.direction[:n_max] for w in winds])
    w_speed = np.stack([w.speed[:n_max] for w in winds])
    cols = {c: np.empty((b, n_max)) for c in RUNLOG_COLUMNS[1:]}
    n_steps = np.full(b, n_max)
    completed = np.zeros(b, dtype=bool)

    active = np.arange(b)
    ctrl = controller
    x = np.full(b, float(course.start[0]))
    y = np.full(b, float(course.start[1]))
    heading = np.full(b, course.initial_heading % 360.0)
    speed = np.zeros(b)
    wp_idx = np.zeros(b, dtype=int)
    prev_err = None

    for k in range(n_max):
        wd, ws = w_dir[active, k], w_speed[active, k]
        dx = wpts[wp_idx, 0] - x
        dy = wpts[wp_idx, 1] - y
        desired = np.mod(np.degrees(np.arctan2(dx, dy)), 360.0)
        err = _wrap180(desired - heading)
        derr = np.zeros_like(err) if prev_err is None else err - prev_err
        rudder = ctrl(params.error_gain * err, params.derror_gain * derr)
        rudder = np.clip(rudder, -params.rudder_limit, params.rudder_limit)
        for name, val in (
            ("desired_bearing", desired), ("actual_bearing", heading), ("wind_dir", wd),
            ("wind_speed", ws), ("x", x), ("y", y), ("heading", heading),
            ("speed", speed), ("rudder", rudder),
        ):
            cols[name][active, k] = val

        x, y, heading, speed = _advance(x, y, heading, speed, rudder, wd, ws, params, polar)
        arrived = (wpts[wp_idx, 0] - x) ** 2 + (wpts[wp_idx, 1] - y) ** 2 <= r2
        wp_idx = wp_idx + arrived
        done = wp_idx >= n_wp
        prev_err = err
        if done.any():
            n_steps[active[done]] = k + 1
            completed[active[done]] = True
            keep = ~done
            active = active[keep]
            if active.size == 0:
                break
            ctrl = ctrl.take(keep)
            x, y, heading, speed = x[keep], y[keep], heading[keep], speed[keep]
            wp_idx, prev_err = wp_idx[keep], prev_err[keep]

    t = np.arange(n_max) * params.dt
    logs = []
    for i in range(b):
        n = n_steps[i]
        logs.append(
            RunLog(
                t[:n].copy(),
                *(cols[c][i, :n].copy() for c in RUNLOG_COLUMNS[1:]),
                outcome="Completed" if completed[i] else "TimedOut",
            )
        )
    return logs


def run_simulation(
    rb: RuleBase,
    course: Course,
    cfg: WindConfig,
    params: SimParams,
    seed: int,
    wind: WindLog | None = None,
) -> RunLog:
    """Simulate one run. ``wind`` overrides the seeded wind process."""
    if wind is None:
        wind = WindProcess(
            cfg, seed, params.dt, params.wind_jitter_dir, params.wind_jitter_speed
        ).generate(params.max_steps)
    log = simulate_batch([rb], course, [wind], params)[0]
    log.meta.update(config=cfg.label, seed=seed, fou=rb.fou, course=course.vertical_offset)
    return log
