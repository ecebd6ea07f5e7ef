"""Command-line front end: ``noontrack {track,simulate,bounds,selfcheck,figdata,scenarios}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import figures
from .bounds import bounds_report
from .config import (ConfigParseError, ConfigValidationError, ScenarioConfig, apply_overrides, load_raw,
                     packaged_scenarios, resolve)
from .optics import ProbeModel
from .photon_sim import RunAborted, fixed_policy, simulate_run, write_batches_csv
from .selfcheck import run_all
from .tracker import TRACK_COLUMNS, fit_concentration_decay

log = logging.getLogger("noontrack")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_PARSE = 3
EXIT_VALIDATION = 4
EXIT_RUNTIME = 5


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, rows: list, columns: list, config_hash: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns + ["config_hash"])
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns] + [config_hash])
    return path


def _load(args) -> ScenarioConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "no_adaptive", False):
        overrides.append("adaptive.enabled=false")
    cfg = resolve(apply_overrides(load_raw(args.config), overrides))
    if getattr(args, "output_dir", None):
        cfg = ScenarioConfig(**{**cfg.__dict__, "output_dir": Path(args.output_dir)})
    return cfg


def cmd_track(args) -> int:
    cfg = _load(args)
    record, source = figures.run_scenario(cfg)
    h = cfg.config_hash
    out = cfg.output_dir
    traj = write_csv(out / f"{cfg.prefix}_trajectory.csv", record.rows(), TRACK_COLUMNS, h)
    bounds_rows = figures.errors_vs_bounds_rows(record, cfg.probe.photon_number)
    bnd = write_csv(out / f"{cfg.prefix}_bounds.csv", bounds_rows, list(bounds_rows[0]) if bounds_rows else ["t"], h)
    counts = out / f"{cfg.prefix}_counts.csv"
    with open(counts, "w", newline="", encoding="utf-8") as fh:
        write_batches_csv(record.batches, fh, include_truth=True)
    summary = {
        "name": cfg.name,
        "seed": cfg.seed,
        "config_hash": h,
        "config": cfg.resolved,
        "n_points": len(record),
        "modes": dict(sorted(Counter(record.modes).items())),
        "true_rate_per_s": cfg.kinetics.rate,
        "artifacts": [p.name for p in (traj, bnd, counts)],
    }
    if len(record) >= 3:
        fit = fit_concentration_decay(record, cfg.kinetics.t0)
        summary["decay_fit"] = {"rate_per_s": fit.rate, "rate_sd": fit.rate_sd, "c0_molar": fit.c0,
                                "chi2_reduced": fit.chi2_reduced}
    if len(record):
        m = int(np.mean([e.n_events for e in record.estimates]))
        v = float(np.mean([e.v_hat for e in record.estimates]))
        probe = ProbeModel(cfg.probe.photon_number, min(max(v, 0.0), 1.0), cfg.probe.efficiency, cfg.probe.flux)
        summary["bounds_mean_point"] = bounds_report(probe, max(m, 1)).as_dict()
    (out / f"{cfg.prefix}_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"tracked {len(record)} points -> {out}/{cfg.prefix}_*")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    theta0 = cfg.tracker.default_theta0 if args.theta0_deg is None else math.radians(args.theta0_deg)
    batches = simulate_run(cfg.kinetics, cfg.drift, cfg.schedule, fixed_policy(theta0), cfg.probe.flux, cfg.seed)
    path = cfg.output_dir / f"{cfg.prefix}_counts.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_batches_csv(batches, fh, include_truth=not args.no_truth)
    print(f"simulated {len(batches)} batches -> {path}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    try:
        probe = ProbeModel(args.n, args.v, args.eta, 1.0)
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc
    if args.M < 1:
        raise ConfigValidationError("M must be >= 1")
    report = bounds_report(probe, args.M)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    results = run_all(args.coverage_runs)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("selfcheck:", "all checks passed" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_figdata(args) -> int:
    cfg = _load(args)
    h = cfg.config_hash
    fig = args.figure_id
    if fig == "fringe-calibration":
        rows = figures.fringe_calibration(visibility=cfg.drift.v_initial, flux=cfg.probe.flux, seed=cfg.seed)
    elif fig == "adaptive-test":
        rows = figures.adaptive_test_rows(
            figures.staircase_comparison(visibility=cfg.drift.v_initial, flux=cfg.probe.flux,
                                         interval=cfg.schedule.interval, seed=cfg.seed,
                                         fixed_theta0=cfg.tracker.default_theta0))
    else:
        record, source = figures.run_scenario(cfg)
        if fig == "tracking":
            rows = figures.tracking_rows(record, source, cfg.kinetics)
        elif fig == "errors-vs-bounds":
            rows = figures.errors_vs_bounds_rows(record, cfg.probe.photon_number)
        else:
            rows = figures.visibility_rows(record, source)
    path = write_csv(cfg.output_dir / f"{cfg.prefix}_{fig}.csv", rows, list(rows[0]) if rows else [], h)
    print(f"{fig}: {len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name in packaged_scenarios():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noontrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("config", nargs="?", default="invertase-10",
                       help="TOML config path or packaged scenario name (default: invertase-10)")
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", help="overrides [output].directory and $NOONTRACK_OUTPUT_DIR")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")

    p = sub.add_parser("track", help="simulate and adaptively track a scenario")
    scenario_args(p)
    p.add_argument("--no-adaptive", action="store_true", help="hold theta0 at its default")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("simulate", help="write coincidence counts only")
    scenario_args(p)
    p.add_argument("--theta0-deg", type=float)
    p.add_argument("--no-truth", action="store_true", help="omit phi_true/v_true columns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bounds", help="classical vs N00N phase bounds and loss threshold")
    p.add_argument("--n", type=int, default=2, help="photon number N")
    p.add_argument("--eta", type=float, default=0.05, help="overall efficiency")
    p.add_argument("--v", type=float, default=1.0, help="visibility")
    p.add_argument("--M", type=int, default=1, help="number of repetitions")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("selfcheck", help="oracle, Fisher and coverage checks")
    p.add_argument("--coverage-runs", type=int, default=200)
    p.set_defaults(func=cmd_selfcheck)

    p = sub.add_parser("figdata", help="plot-ready CSV for one figure")
    p.add_argument("figure_id", choices=figures.FIGURES)
    scenario_args(p)
    p.set_defaults(func=cmd_figdata)

    p = sub.add_parser("scenarios", help="list packaged scenarios")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigParseError as exc:
        log.error("config parse error: %s", exc)
        return EXIT_CONFIG_PARSE
    except ConfigValidationError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_VALIDATION
    except RunAborted as exc:
        log.error("run aborted after %d batches: %s", len(exc.partial), exc)
        return EXIT_RUNTIME
    except (RuntimeError, ValueError, OSError) as exc:
        log.error("runtime failure: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
