"""
Batch experiment runner.

Sweeps course offsets x wind configurations x FOU sizes x repeats, computes a
:class:`MetricsRecord` per run and aggregates each (course, config, fou) cell.

Every run's wind seed is ``base_seed XOR blake2b(cell, repeat)``, so a cell can
be reproduced alone. With ``paired=True`` (default) the FOU size is left out of
the hash: repeat r sees the same wind under every FOU size.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from it2sail.boat import COURSE_OFFSETS, RunLog, SimParams, course_from_offset, simulate_batch
from it2sail.errors import EmptySeries
from it2sail.fuzzy import FOU_SIZES, default_rule_base
from it2sail.metrics import BD_FLOOR, MetricsRecord, compute_metrics, normalize_series
from it2sail.wind import LABELS, WindProcess, config_from_label, generate_wind, wind_stats

log = logging.getLogger(__name__)

SUMMARY_HEADER = (
    "course", "config", "fou", "mean_rmse", "sd_rmse", "mean_um", "sd_um",
    "mean_bd", "sd_bd", "mean_rp", "sd_rp", "completion_rate",
)
MANIFEST_HEADER = ("course", "config", "fou", "repeat", "seed", "outcome", "n")
# summary column -> MetricsRecord field
_AGG_FIELDS = {"rmse": "abs_perf", "um": "uncertainty_measure", "bd": "base_difficulty", "rp": "rel_perf"}


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _key(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


@dataclass(frozen=True)
class ExperimentGrid:
    courses: tuple = COURSE_OFFSETS
    configs: tuple = LABELS
    fou_sizes: tuple = FOU_SIZES
    repeats: int = 30
    base_seed: int = 0
    paired: bool = True

    def __post_init__(self):
        if not (self.courses and self.configs and self.fou_sizes):
            raise ValueError("grid subsets must be nonempty")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        for lb in self.configs:
            config_from_label(lb)
        bad = [c for c in self.courses if c not in COURSE_OFFSETS]
        if bad:
            raise ValueError(f"unsupported course offsets {bad}; choose from {COURSE_OFFSETS}")

    @property
    def n_runs(self) -> int:
        return len(self.courses) * len(self.configs) * len(self.fou_sizes) * self.repeats


def stable_hash(*parts) -> int:
    text = "|".join(_key(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def run_seed(base_seed: int, course, config: str, fou, repeat: int, paired: bool = True) -> int:
    return base_seed ^ stable_hash(course, config, "*" if paired else fou, repeat)


@dataclass(frozen=True)
class RunRecord:
    course: int
    config: str
    fou: float
    repeat: int
    seed: int
    outcome: str
    n: int
    metrics: MetricsRecord

    @property
    def sd_dir(self) -> float:
        return self.metrics.sd_dir

    @property
    def sd_speed(self) -> float:
        return self.metrics.sd_speed


@dataclass
class SummaryRow:
    course: int
    config: str
    fou: float
    n_runs: int
    mean: dict
    sd: dict
    completion_rate: float

    def csv_row(self) -> list[str]:
        vals = [self.course, self.config, self.fou]
        for name in _AGG_FIELDS.values():
            vals += [self.mean[name], self.sd[name]]
        return [fmt(v) for v in vals + [self.completion_rate]]


@dataclass
class GridResult:
    records: list[RunRecord]
    rows: list[SummaryRow]
    logs: list[RunLog] = field(default_factory=list)

    def row(self, course, config, fou) -> SummaryRow:
        for r in self.rows:
            if (r.course, r.config, r.fou) == (course, config, fou):
                return r
        raise KeyError((course, config, fou))


def summarize(records: Sequence[RunRecord]) -> list[SummaryRow]:
    """Per-cell mean and population SD of every metric, in grid order."""
    cells = defaultdict(list)
    for rec in records:
        cells[(rec.course, rec.config, rec.fou)].append(rec)
    rows = []
    for (course, config, fou), recs in cells.items():
        table = {f: np.array([getattr(r.metrics, f) for r in recs]) for f in MetricsRecord.__dataclass_fields__}
        rows.append(
            SummaryRow(
                course, config, fou, len(recs),
                {f: float(v.mean()) for f, v in table.items()},
                {f: float(v.std()) for f, v in table.items()},
                sum(r.outcome == "Completed" for r in recs) / len(recs),
            )
        )
    return rows


@dataclass(frozen=True)
class _Batch:
    course: int
    config: str
    fous: tuple
    repeats: tuple
    base_seed: int
    paired: bool
    params: SimParams
    controller: tuple
    bd_floor: float
    keep_logs: bool


def _run_batch(job: _Batch):
    p = job.params
    cfg = config_from_label(job.config)
    course = course_from_offset(job.course, p.two_leg)
    controller = dict(job.controller)
    controller.setdefault("rudder_limit", p.rudder_limit)
    rule_bases, winds, keys = [], [], []
    cache = {}
    for fou in job.fous:
        rb = default_rule_base(fou, **controller)
        for r in job.repeats:
            seed = run_seed(job.base_seed, job.course, job.config, fou, r, job.paired)
            if seed not in cache:
                cache[seed] = WindProcess(
                    cfg, seed, p.dt, p.wind_jitter_dir, p.wind_jitter_speed
                ).generate(p.max_steps)
            rule_bases.append(rb)
            winds.append(cache[seed])
            keys.append((fou, r, seed))
    logs = simulate_batch(rule_bases, course, winds, p)
    records = []
    for (fou, r, seed), rl in zip(keys, logs):
        m = compute_metrics(rl, course.bearing, job.bd_floor)
        records.append(RunRecord(job.course, job.config, fou, r, seed, rl.outcome, rl.n, m))
        rl.meta.update(course=job.course, config=job.config, fou=fou, repeat=r, seed=seed)
    return records, logs if job.keep_logs else None


def run_grid(
    grid: ExperimentGrid,
    params: SimParams | None = None,
    controller: dict | None = None,
    workers: int = 1,
    keep_logs: bool = False,
    log_dir: str | Path | None = None,
    bd_floor: float = BD_FLOOR,
) -> GridResult:
    """Simulate every run of the grid and aggregate per cell.

    Run logs are large; they are returned only with ``keep_logs`` and written
    to ``log_dir`` (plus a ``runs.csv`` manifest) only when it is given.
    """
    params = params or SimParams()
    want_logs = keep_logs or log_dir is not None
    jobs = [
        _Batch(
            course, config, tuple(grid.fou_sizes), tuple(range(grid.repeats)),
            grid.base_seed, grid.paired, params, tuple(sorted((controller or {}).items())),
            bd_floor, want_logs,
        )
        for course in grid.courses
        for config in grid.configs
    ]
    log.info("running %d runs in %d batches", grid.n_runs, len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outputs = list(pool.map(_run_batch, jobs))
    else:
        outputs = [_run_batch(j) for j in jobs]

    records, logs = [], []
    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
    for recs, batch_logs in outputs:
        records.extend(recs)
        if batch_logs is None:
            continue
        if log_dir is not None:
            for rec, rl in zip(recs, batch_logs):
                rl.to_csv(log_dir / f"{rec.course}_{rec.config}_{_key(rec.fou)}_{rec.repeat}.csv")
        if keep_logs:
            logs.extend(batch_logs)
    if log_dir is not None:
        write_manifest(records, log_dir / "runs.csv")
    return GridResult(records, summarize(records), logs)


def write_manifest(records: Iterable[RunRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MANIFEST_HEADER)
        for r in records:
            w.writerow([r.course, r.config, _key(r.fou), r.repeat, r.seed, r.outcome, r.n])


def records_from_logs(log_dir: str | Path, params: SimParams | None = None,
                      bd_floor: float = BD_FLOOR) -> list[RunRecord]:
    """Rebuild run records from a directory written by :func:`run_grid`."""
    params = params or SimParams()
    log_dir = Path(log_dir)
    manifest = log_dir / "runs.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"no run manifest at {manifest}")
    records = []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            course, config = int(row["course"]), row["config"]
            fou = float(row["fou"])
            fou = int(fou) if fou.is_integer() else fou
            rl = RunLog.from_csv(log_dir / f"{course}_{config}_{row['fou']}_{row['repeat']}.csv",
                                 outcome=row["outcome"])
            bearing = course_from_offset(course, params.two_leg).bearing
            records.append(RunRecord(course, config, fou, int(row["repeat"]), int(row["seed"]),
                                     row["outcome"], rl.n, compute_metrics(rl, bearing, bd_floor)))
    return records


def _label_order(label: str) -> int:
    return LABELS.index(label)


def emit_summary(rows: Sequence[SummaryRow], out_dir: str | Path,
                 normalized: bool = False) -> list[Path]:
    """One CSV and one markdown table per (course, fou), configs in A..I order.

    With ``normalized`` an extra ``*_normalized.csv`` holds the mean columns
    min-max scaled within the table (SD columns scaled by the same factor).
    """
    if not rows:
        raise EmptySeries("no summary rows to emit")
    out = Path(out_dir) / "summary"
    out.mkdir(parents=True, exist_ok=True)
    tables = defaultdict(list)
    for r in rows:
        tables[(r.course, r.fou)].append(r)
    written = []
    for (course, fou), trs in tables.items():
        trs = sorted(trs, key=lambda r: _label_order(r.config))
        stem = f"{course}_{_key(fou)}"
        path = out / f"{stem}.csv"
        _write_csv(path, [r.csv_row() for r in trs])
        written.append(path)
        norm = {name: normalize_series([r.mean[name] for r in trs]) for name in _AGG_FIELDS.values()}
        if normalized:
            path = out / f"{stem}_normalized.csv"
            _write_csv(path, _normalized_rows(trs, norm))
            written.append(path)
        path = out / f"{stem}.md"
        path.write_text(markdown_table(trs, norm, course, fou))
        written.append(path)
    return written


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)


def _normalized_rows(trs, norm):
    rows = []
    for i, r in enumerate(trs):
        vals = [r.course, r.config, r.fou]
        for name in _AGG_FIELDS.values():
            span = max(x.mean[name] for x in trs) - min(x.mean[name] for x in trs)
            vals += [norm[name][i], r.sd[name] / span if span > 0 else 0.0]
        rows.append([fmt(v) for v in vals + [r.completion_rate]])
    return rows


def markdown_table(trs, norm, course, fou) -> str:
    lines = [
        f"Course offset {course} m, FOU size {_key(fou)}",
        "",
        "| Wind Config. | Uncertainty Measure | Perf_Absolute | Base Difficulty | Perf_Relative "
        "| completion | norm. UM | norm. Perf_Absolute | norm. Base Difficulty | norm. Perf_Relative |",
        "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|",
    ]
    for i, r in enumerate(trs):
        m = r.mean
        lines.append(
            f"| {r.config} | {m['uncertainty_measure']:.4f} | {m['abs_perf']:.4f} "
            f"| {m['base_difficulty']:.4f} | {m['rel_perf']:.4f} | {r.completion_rate:.2f} "
            f"| {norm['uncertainty_measure'][i]:.3f} | {norm['abs_perf'][i]:.3f} "
            f"| {norm['base_difficulty'][i]:.3f} | {norm['rel_perf'][i]:.3f} |"
        )
    return "\n".join(lines) + "\n"


def wind_sigma_series(records: Iterable) -> dict[str, tuple[float, float]]:
    """Mean (sd_dir, sd_speed) per configuration label, in A..I order.

    ``records`` need ``config``, ``sd_dir`` and ``sd_speed`` attributes.
    """
    acc = defaultdict(list)
    for r in records:
        acc[r.config].append((r.sd_dir, r.sd_speed))
    return {
        lb: tuple(float(v) for v in np.mean(acc[lb], axis=0))
        for lb in sorted(acc, key=_label_order)
    }


def emit_wind_figures(records: Iterable, out_dir: str | Path) -> Path:
    series = wind_sigma_series(records)
    if not series:
        raise EmptySeries("no runs to summarise")
    path = Path(out_dir) / "wind"
    path.mkdir(parents=True, exist_ok=True)
    path = path / "sigma_series.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "dir_score", "speed_score", "sd_dir", "sd_speed", "uncertainty_measure"])
        for lb, (sd_d, sd_s) in series.items():
            cfg = config_from_label(lb)
            w.writerow([lb, cfg.dir_score, cfg.speed_score, fmt(sd_d), fmt(sd_s), fmt(sd_d * sd_s)])
    return path


@dataclass(frozen=True)
class WindRecord:
    config: str
    repeat: int
    seed: int
    mean_dir: float
    sd_dir: float
    mean_speed: float
    sd_speed: float


def wind_check(configs: Sequence[str], repeats: int, duration: float, params: SimParams,
               base_seed: int = 0) -> list[WindRecord]:
    """Wind statistics only, no boats; seeds follow the course-25 grid cells."""
    out = []
    for lb in configs:
        cfg = config_from_label(lb)
        for r in range(repeats):
            seed = run_seed(base_seed, COURSE_OFFSETS[0], lb, 0, r, True)
            wl = generate_wind(cfg, seed, duration, params.dt,
                               jitter_dir=params.wind_jitter_dir,
                               jitter_speed=params.wind_jitter_speed)
            st = wind_stats(wl.direction, wl.speed)
            out.append(WindRecord(lb, r, seed, st.mean_dir, st.sd_dir, st.mean_speed, st.sd_speed))
    return out
