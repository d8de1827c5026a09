"""Command line entry point: ``it2sail {run,single,report,windcheck}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from it2sail import config as config_mod
from it2sail.boat import COURSE_OFFSETS, course_from_offset, run_simulation
from it2sail.errors import InvalidOffset, UnknownLabel
from it2sail.fuzzy import FOU_SIZES, default_rule_base
from it2sail.harness import (
    ExperimentGrid, emit_summary, emit_wind_figures, records_from_logs, run_grid,
    run_seed, summarize, wind_check, wind_sigma_series,
)
from it2sail.metrics import BD_FLOOR, compute_metrics
from it2sail.wind import LABELS, config_from_label

log = logging.getLogger("it2sail")


def _list(kind):
    def parse(text):
        return [kind(v) for v in text.split(",") if v.strip()]
    return parse


def _number(text):
    v = float(text)
    return int(v) if v.is_integer() else v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--course", type=_list(int), action="extend",
                        help=f"course offset(s) in metres, from {COURSE_OFFSETS}")
    common.add_argument("--config", type=_list(str.strip), action="extend",
                        help="wind configuration label(s) A..I")
    common.add_argument("--fou", type=_list(_number), action="extend",
                        help=f"FOU size(s), default {FOU_SIZES}")
    common.add_argument("--repeats", type=int, help="runs per cell (default 30)")
    common.add_argument("--seed", type=int, help="base seed (default 0)")
    common.add_argument("--out-dir", type=Path, help="output directory (default ./out)")
    common.add_argument("--params", type=Path, help="YAML configuration file")
    common.add_argument("--normalized", action="store_true", default=None,
                        help="also write min-max normalised summary tables")
    common.add_argument("--workers", type=int, help="worker processes (default 1)")
    common.add_argument("--unpaired", action="store_true",
                        help="draw independent wind for each FOU size")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="it2sail", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run the (filtered) experiment grid")
    run.add_argument("--save-logs", action="store_true", default=None,
                     help="write every RunLog to out-dir/logs")
    single = sub.add_parser("single", parents=[common], help="one run with a full RunLog dump")
    single.add_argument("--repeat", type=int, default=0, help="repeat index for seed derivation")
    sub.add_parser("report", parents=[common], help="recompute summaries from out-dir/logs")
    wc = sub.add_parser("windcheck", parents=[common], help="wind statistics only")
    wc.add_argument("--duration", type=float, default=600.0, help="seconds per wind log")
    return p


def _settings(args) -> dict:
    """File values overridden by any flag given on the command line."""
    cfg = config_mod.load_config(args.params)
    grid, out = cfg.get("grid", {}), cfg.get("output", {})

    def pick(flag, section, key, default):
        return flag if flag is not None else section.get(key, default)

    s = {
        "courses": tuple(pick(args.course, grid, "courses", COURSE_OFFSETS)),
        "configs": tuple(str(c) for c in pick(args.config, grid, "configs", LABELS)),
        "fou_sizes": tuple(pick(args.fou, grid, "fou_sizes", FOU_SIZES)),
        "repeats": pick(args.repeats, grid, "repeats", 30),
        "seed": pick(args.seed, grid, "seed", 0),
        "paired": False if args.unpaired else grid.get("paired", True),
        "out_dir": Path(pick(args.out_dir, out, "out_dir", "out")),
        "normalized": pick(args.normalized, out, "normalized", False),
        "workers": pick(args.workers, out, "workers", 1),
        "save_logs": pick(getattr(args, "save_logs", None), out, "save_logs", False),
        "params": config_mod.sim_params(cfg),
        "controller": config_mod.controller_overrides(cfg),
        "bd_floor": cfg.get("metrics", {}).get("bd_floor", BD_FLOOR),
    }
    for lb in s["configs"]:
        config_from_label(lb)
    for c in s["courses"]:
        if c not in COURSE_OFFSETS:
            raise InvalidOffset(f"course offset must be one of {COURSE_OFFSETS}, got {c}")
    return s


def _grid(s) -> ExperimentGrid:
    return ExperimentGrid(s["courses"], s["configs"], s["fou_sizes"], s["repeats"],
                          s["seed"], s["paired"])


def _print_rows(rows):
    print(f"{'course':>6} {'config':>6} {'fou':>5} {'mean_rmse':>10} {'mean_um':>10} "
          f"{'mean_bd':>8} {'mean_rp':>10} {'done':>5}")
    for r in rows:
        m = r.mean
        print(f"{r.course:>6} {r.config:>6} {r.fou:>5} {m['abs_perf']:>10.4f} "
              f"{m['uncertainty_measure']:>10.4f} {m['base_difficulty']:>8.4f} "
              f"{m['rel_perf']:>10.4f} {r.completion_rate:>5.2f}")


def cmd_run(s) -> int:
    grid = _grid(s)
    t0 = time.perf_counter()
    log_dir = s["out_dir"] / "logs" if s["save_logs"] else None
    res = run_grid(grid, s["params"], s["controller"], workers=s["workers"],
                   log_dir=log_dir, bd_floor=s["bd_floor"])
    emit_summary(res.rows, s["out_dir"], s["normalized"])
    emit_wind_figures(res.records, s["out_dir"])
    _print_rows(res.rows)
    log.info("%d runs in %.1f s", len(res.records), time.perf_counter() - t0)
    return 0


def cmd_single(s, repeat: int) -> int:
    for key in ("courses", "configs", "fou_sizes"):
        if len(s[key]) != 1:
            raise ValueError(f"single needs exactly one value for --{key.rstrip('s').replace('_size', '')}")
    course_off, label, fou = s["courses"][0], s["configs"][0], s["fou_sizes"][0]
    params = s["params"]
    ctrl = dict(s["controller"])
    ctrl.setdefault("rudder_limit", params.rudder_limit)
    course = course_from_offset(course_off, params.two_leg)
    seed = run_seed(s["seed"], course_off, label, fou, repeat, s["paired"])
    rl = run_simulation(default_rule_base(fou, **ctrl), course, config_from_label(label),
                        params, seed)
    out = s["out_dir"] / "logs"
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{course_off}_{label}_{fou}_{repeat}.csv"
    rl.to_csv(path)
    m = compute_metrics(rl, course.bearing, s["bd_floor"])
    print(f"outcome={rl.outcome} n={rl.n} seed={seed} log={path}")
    for k, v in m.as_dict().items():
        print(f"{k}={v:.6g}")
    return 0


def cmd_report(s) -> int:
    records = records_from_logs(s["out_dir"] / "logs", s["params"], s["bd_floor"])
    rows = summarize(records)
    emit_summary(rows, s["out_dir"], s["normalized"])
    emit_wind_figures(records, s["out_dir"])
    _print_rows(rows)
    return 0


def cmd_windcheck(s, duration: float) -> int:
    recs = wind_check(s["configs"], s["repeats"], duration, s["params"], s["seed"])
    path = emit_wind_figures(recs, s["out_dir"])
    print(f"{'config':>6} {'sd_dir':>8} {'sd_speed':>8}")
    for lb, (sd_d, sd_s) in wind_sigma_series(recs).items():
        print(f"{lb:>6} {sd_d:>8.3f} {sd_s:>8.3f}")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        s = _settings(args)
        if args.command == "run":
            return cmd_run(s)
        if args.command == "single":
            return cmd_single(s, args.repeat)
        if args.command == "report":
            return cmd_report(s)
        return cmd_windcheck(s, args.duration)
    except (UnknownLabel, InvalidOffset, config_mod.ConfigError) as exc:
        print(f"it2sail: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"it2sail: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
