"""
Bounded stochastic wind.

Nine configurations A..I combine three direction-variability levels with
three speed-variability levels. Every ``CHANGE_INTERVAL`` seconds a new wind
target is drawn from a normal distribution centred on the configured range
(sigma = range / 4) and clamped to the range; every simulation step reports
the held target plus a small jitter.

Two independent random streams are spawned from the run seed, one for targets
and one for jitter, so a whole log can be drawn in bulk and still equal the
step-by-step process exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from it2sail.errors import EmptyLog, UnknownLabel

CHANGE_INTERVAL = 4.0
JITTER_DIR = 1.0
JITTER_SPEED = 0.25

# level name -> (score, lower, upper)
DIRECTION_LEVELS = {"None": (0, 180.0, 180.0), "Low": (1, 160.0, 200.0), "High": (2, 140.0, 220.0)}
SPEED_LEVELS = {"None": (0, 7.0, 7.0), "Low": (1, 4.0, 10.0), "High": (2, 1.0, 13.0)}

# label -> (direction level, speed level); rows are direction, columns speed
_LAYOUT = {
    "A": ("None", "None"), "D": ("None", "Low"), "G": ("None", "High"),
    "B": ("Low", "None"), "E": ("Low", "Low"), "H": ("Low", "High"),
    "C": ("High", "None"), "F": ("High", "Low"), "I": ("High", "High"),
}
LABELS = tuple("ABCDEFGHI")


@dataclass(frozen=True)
class WindConfig:
    label: str
    dir_lower: float
    dir_upper: float
    speed_lower: float
    speed_upper: float
    dir_score: int
    speed_score: int

    @property
    def total_score(self) -> int:
        return self.dir_score + self.speed_score


class WindSample(NamedTuple):
    t: float
    direction: float
    speed: float


def config_from_label(label: str) -> WindConfig:
    try:
        d_level, s_level = _LAYOUT[label]
    except (KeyError, TypeError):
        raise UnknownLabel(
            f"unknown wind configuration {label!r}; valid labels are {', '.join(LABELS)}"
        ) from None
    d_score, d_lo, d_hi = DIRECTION_LEVELS[d_level]
    s_score, s_lo, s_hi = SPEED_LEVELS[s_level]
    return WindConfig(label, d_lo, d_hi, s_lo, s_hi, d_score, s_score)


def difficulty_order() -> list[str]:
    """Labels sorted by total uncertainty score, ties in alphabetical order."""
    return sorted(LABELS, key=lambda lb: (config_from_label(lb).total_score, lb))


def _clamped_normal(z, lower, upper):
    mid = (lower + upper) / 2
    return np.clip(mid + z * (upper - lower) / 4, lower, upper)


def sample_target(rng: np.random.Generator, cfg: WindConfig) -> tuple[float, float]:
    """Draw one (direction, speed) target. Always consumes two normals."""
    z_dir, z_speed = rng.standard_normal(2)
    return (
        float(_clamped_normal(z_dir, cfg.dir_lower, cfg.dir_upper)),
        float(_clamped_normal(z_speed, cfg.speed_lower, cfg.speed_upper)),
    )


def steps_per_change(dt: float, interval: float = CHANGE_INTERVAL) -> int:
    k = round(interval / dt)
    if k < 1 or abs(k * dt - interval) > 1e-9:
        raise ValueError(f"dt={dt} must divide the wind change interval {interval}")
    return k


class WindProcess:
    """Step-by-step wind generator for a single run."""

    def __init__(
        self,
        cfg: WindConfig,
        seed: int,
        dt: float,
        jitter_dir: float = JITTER_DIR,
        jitter_speed: float = JITTER_SPEED,
        interval: float = CHANGE_INTERVAL,
    ):
        self.cfg = cfg
        self.dt = dt
        self.jitter = (jitter_dir, jitter_speed)
        self._every = steps_per_change(dt, interval)
        target_seq, jitter_seq = np.random.SeedSequence(seed).spawn(2)
        self._target_rng = np.random.default_rng(target_seq)
        self._jitter_rng = np.random.default_rng(jitter_seq)
        self._step = 0
        self.target: tuple[float, float] | None = None

    def step(self) -> WindSample:
        if self._step % self._every == 0:
            self.target = sample_target(self._target_rng, self.cfg)
        j_dir, j_speed = self._jitter_rng.standard_normal(2)
        t = self._step * self.dt
        self._step += 1
        return WindSample(
            t,
            float((self.target[0] + self.jitter[0] * j_dir) % 360.0),
            float(max(0.0, self.target[1] + self.jitter[1] * j_speed)),
        )

    def generate(self, n: int) -> WindLog:
        """The next ``n`` samples in bulk; identical to calling :meth:`step` n times."""
        first = self._step
        idx = np.arange(first, first + n)
        # targets active at each step; the target at block `first // every`
        # is redrawn only if `first` starts a new block
        block = idx // self._every
        b0 = first // self._every
        fresh = self._step % self._every == 0
        n_new = block[-1] - b0 + (1 if fresh else 0) if n else 0
        z = self._target_rng.standard_normal((n_new, 2))
        cfg = self.cfg
        t_dir = _clamped_normal(z[:, 0], cfg.dir_lower, cfg.dir_upper)
        t_speed = _clamped_normal(z[:, 1], cfg.speed_lower, cfg.speed_upper)
        if not fresh:
            t_dir = np.concatenate([[self.target[0]], t_dir])
            t_speed = np.concatenate([[self.target[1]], t_speed])
        j = self._jitter_rng.standard_normal((n, 2))
        pos = block - b0
        direction = (t_dir[pos] + self.jitter[0] * j[:, 0]) % 360.0
        speed = np.maximum(0.0, t_speed[pos] + self.jitter[1] * j[:, 1])
        if n:
            self.target = (float(t_dir[-1]), float(t_speed[-1]))
        self._step += n
        return WindLog(idx * self.dt, direction, speed)


def step_wind(process: WindProcess) -> WindSample:
    return process.step()


@dataclass
class WindLog:
    t: np.ndarray
    direction: np.ndarray
    speed: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> WindSample:
        return WindSample(float(self.t[i]), float(self.direction[i]), float(self.speed[i]))

    def head(self, n: int) -> WindLog:
        return WindLog(self.t[:n], self.direction[:n], self.speed[:n])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "direction_deg", "speed_ms"])
            for row in zip(self.t, self.direction, self.speed):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> WindLog:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2])


class WindStats(NamedTuple):
    mean_dir: float
    sd_dir: float
    mean_speed: float
    sd_speed: float


def wind_stats(direction, speed) -> WindStats:
    """Arithmetic mean and population SD per channel.

    Directions are treated linearly; every configuration stays within
    +-40 degrees of 180, far from the 0/360 seam.
    """
    direction = np.asarray(direction, dtype=float)
    speed = np.asarray(speed, dtype=float)
    if direction.size == 0 or speed.size == 0:
        raise EmptyLog("wind statistics need at least one sample")
    return WindStats(
        float(direction.mean()), float(direction.std()), float(speed.mean()), float(speed.std())
    )


def generate_wind(cfg: WindConfig, seed: int, duration: float, dt: float, **kwargs) -> WindLog:
    n = int(round(duration / dt))
    return WindProcess(cfg, seed, dt, **kwargs).generate(n)
