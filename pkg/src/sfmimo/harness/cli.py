"""``sfmimo`` command line: simulate, ambiguity, resolution, validate."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import analysis
from ..scene import SPEED_OF_LIGHT
from ..sensing import DEFAULT_MAX_ENTRIES, ParamGrid, build_sensing_matrix
from ..synth import SLOW_TARGET_LIMIT
from ..waveform import make_schedule
from . import config as config_io
from .experiment import ExperimentError, TruthSnapWarning, draw_system, experiment_grid, run_experiment, snap_truth
from .output import _jsonable, emit_results

OUTPUT_ENV = "SFMIMO_OUTPUT_DIR"
DEFAULT_OUTPUT = "sfmimo_out"
log = logging.getLogger("sfmimo")


def _output_dir(args, cfg) -> Path:
    return Path(args.output_dir or os.environ.get(OUTPUT_ENV) or cfg.experiment.output_dir or DEFAULT_OUTPUT)


def _load(args):
    cfg = config_io.load(args.config)
    return cfg.with_overrides(seed=args.seed, trials=getattr(args, "trials", None))


def _print(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def _schedule(cfg):
    sch, sc = cfg.schedule, cfg.scenario
    rng = np.random.default_rng(cfg.experiment.master_seed)
    return make_schedule(sch.mode, sch.pulse_count, sch.pulse_interval_s, sc.carrier_hz, rng, step=sch.step,
                         step_min=sch.step_min, step_max=sch.step_max, leading_constant=sch.leading_constant)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _output_dir(args, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruthSnapWarning)
        result = run_experiment(cfg, workers=args.workers)
    for w in caught:
        log.warning("%s", w.message)
    paths = emit_results(result, out, plots=not args.no_plot)
    _print({"summary": result.summary(), "output_dir": str(out), "files": sorted(p.name for p in paths)})
    return 0


def cmd_ambiguity(args) -> int:
    cfg = _load(args)
    schedule = _schedule(cfg)
    report = analysis.ambiguity_report(schedule).as_dict()
    report["carrier_hz"] = schedule.base_carrier
    report["pulse_interval_s"] = schedule.repetition_interval
    report["steps"] = list(schedule.steps)
    _print(report)
    return 0


def _adjacent_velocity_ratios(cfg, system) -> list[float]:
    """|<g_k, g_k+1>| / |<g_k, g_k>| for adjacent velocity cells, receiver 0, all pulses."""
    grid = experiment_grid(cfg)
    vaxis = grid.velocity_axis
    if vaxis.size < 2:
        return []
    anchor = (float(grid.angle_axis[grid.angle_axis.size // 2]), 0.0, float(grid.range_axis[0]))
    g = ParamGrid.along("velocity", vaxis, [anchor])
    theta = build_sensing_matrix(g, system.scenario, system.schedule, system.waveform, system.phis)
    rows = system.schedule.pulse_count * cfg.scenario.compression
    A = theta.entries[:rows]  # receiver-major rows: receiver 0 comes first
    return [analysis.column_correlation(A, k, k + 1) / analysis.column_correlation(A, k, k)
            for k in range(vaxis.size - 1)]


def cmd_resolution(args) -> int:
    """h metric and conditions for the trial-0 schedule, plus an optional random sweep."""
    cfg = _load(args)
    system = draw_system(cfg, 0)
    schedule = system.schedule
    delta_b = cfg.grid.velocity_mps.step
    alpha = analysis.velocity_resolution_alpha(delta_b, schedule.repetition_interval, schedule.base_carrier)
    ratios = _adjacent_velocity_ratios(cfg, system)
    report = analysis.resolution_report(schedule.steps, alpha, ratios).as_dict()
    report["velocity_step_mps"] = delta_b
    report["steps"] = list(schedule.steps)
    if args.draws:
        sweep = analysis.sweep_conditions(np.random.default_rng(cfg.experiment.master_seed), args.draws,
                                          max_step=args.max_step)
        report["sweep"] = sweep.as_dict()
    _print(report)
    return 0


def _check(name: str, ok: bool, detail: str = "") -> dict:
    return {"check": name, "ok": bool(ok), "detail": detail}


def cmd_validate(args) -> int:
    cfg = _load(args)
    checks = [_check("round_trip", config_io.loads(config_io.dumps(cfg)) == cfg)]
    grid = experiment_grid(cfg)
    checks.append(_check("grid_nonempty", grid.size > 0, f"{grid.size} cells"))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruthSnapWarning)
        snap_truth(cfg, grid)
    checks.append(_check("truth_on_grid", not caught, "; ".join(str(w.message) for w in caught)))
    sc = cfg.scenario
    aperture_limit = 100.0 * sc.disk_radius_m
    near = [t.range_m for t in cfg.targets if t.range_m < aperture_limit]
    checks.append(_check("far_field", not near, f"targets must be beyond {aperture_limit:g} m"))
    fmax = sc.carrier_hz * (1 + max(cfg.schedule.step_max, cfg.schedule.step * cfg.schedule.pulse_count))
    vmax = max((abs(t.speed_mps) for t in cfg.targets), default=0.0)
    slow = 2 * vmax * fmax / SPEED_OF_LIGHT * sc.samples_per_pulse * sc.symbol_interval_s
    checks.append(_check("slow_target", slow < SLOW_TARGET_LIMIT, f"f_k Ts L = {slow:.3g}"))
    rows = sc.n_rx * sc.compression * cfg.schedule.pulse_count
    if cfg.estimator.mode == "joint":
        entries = rows * grid.size
        checks.append(_check("memory", entries <= DEFAULT_MAX_ENTRIES, f"{entries} sensing entries"))
    try:
        draw_system(cfg, 0)
        checks.append(_check("draw", True))
    except ValueError as exc:
        checks.append(_check("draw", False, str(exc)))
    _print({"config": str(args.config), "checks": checks})
    return 0 if all(c["ok"] for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfmimo", description="Compressive step-frequency MIMO radar experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config file, or the name of a bundled config")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run the Monte Carlo experiment")
    s.add_argument("--output-dir", help=f"output directory (else ${OUTPUT_ENV}, then the config)")
    s.add_argument("--trials", type=int, help="override the trial count")
    s.add_argument("--workers", type=int, help="worker processes; outputs do not depend on it")
    s.add_argument("--no-plot", action="store_true", help="skip PNG heatmaps")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("ambiguity", parents=[common], help="unambiguous range and velocity of the schedule")
    a.set_defaults(func=cmd_ambiguity)

    r = sub.add_parser("resolution", parents=[common], help="h metric and sufficient-condition checks")
    r.add_argument("--draws", type=int, default=0, help="random (steps, alpha) draws for a condition sweep")
    r.add_argument("--max-step", type=float, default=1e-2)
    r.set_defaults(func=cmd_resolution)

    v = sub.add_parser("validate", parents=[common], help="check a config's invariants")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, config_io.ConfigError, ExperimentError, OSError) as exc:
        print(f"sfmimo: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
