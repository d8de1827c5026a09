"""YAML experiment configuration.

Example::

    grid:
      courses: [25, 50, 100]
      configs: [A, B, C, D, E, F, G, H, I]
      fou_sizes: [0, 5, 10, 15, 20, 25]
      repeats: 30
      seed: 0
      paired: true
    sim:                      # any SimParams field
      dt: 0.1
      timeout: 600
      polar: [[0, 0], [30, 0], [90, 0.5], [180, 0.4]]
    controller:               # overrides for default_rule_base
      apexes: [-60, -30, 0, 30, 60]
      half_width: 30
      singleton_values: [-45, -22.5, 0, 22.5, 45]
    metrics:
      bd_floor: 0.01
    output:
      out_dir: out
      normalized: false
      save_logs: false
      workers: 1

Every section and key is optional.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

import yaml

from it2sail.boat import SimParams

SECTIONS = {"grid", "sim", "controller", "metrics", "output"}
_GRID_KEYS = {"courses", "configs", "fou_sizes", "repeats", "seed", "paired"}
_CONTROLLER_KEYS = {"apexes", "half_width", "singleton_values", "consequents", "universe"}
_OUTPUT_KEYS = {"out_dir", "normalized", "save_logs", "workers"}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(data) - SECTIONS
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    _check_keys(data.get("grid", {}), _GRID_KEYS, "grid")
    _check_keys(data.get("controller", {}), _CONTROLLER_KEYS, "controller")
    _check_keys(data.get("output", {}), _OUTPUT_KEYS, "output")
    _check_keys(data.get("metrics", {}), {"bd_floor"}, "metrics")
    _check_keys(data.get("sim", {}), {f.name for f in fields(SimParams)}, "sim")
    return data


def _check_keys(section, allowed, name):
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")


def sim_params(cfg: dict) -> SimParams:
    sim = dict(cfg.get("sim", {}))
    if "polar" in sim:
        sim["polar"] = tuple(tuple(float(v) for v in pt) for pt in sim["polar"])
    return SimParams(**sim)


def controller_overrides(cfg: dict) -> dict:
    ctrl = dict(cfg.get("controller", {}))
    for key in ("apexes", "singleton_values"):
        if key in ctrl:
            ctrl[key] = tuple(float(v) for v in ctrl[key])
    if "consequents" in ctrl:
        ctrl["consequents"] = tuple(tuple(int(c) for c in row) for row in ctrl["consequents"])
    return ctrl
