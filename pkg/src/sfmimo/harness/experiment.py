"""Monte Carlo runs: per-trial draws, estimation and occurrence counting."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..estimator import (DecoupledConfig, EstimationError, RadarSystem, SolverConfig, estimate_decoupled,
                         estimate_joint)
from ..scene import Jammer, Scenario, Target, place_nodes_uniform_disk
from ..sensing import MemoryBudgetError, ParamGrid
from ..solver import RecoveryError
from ..synth import gaussian_measurement_matrix, synthesize
from ..waveform import gen_orthogonal_qpsk, make_schedule
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SNAP_TOL = 1e-9
TRIAL_ERRORS = (EstimationError, RecoveryError, MemoryBudgetError)


class ExperimentError(RuntimeError):
    """Every trial failed."""


class TruthSnapWarning(UserWarning):
    """A configured target does not sit on a grid point."""


@dataclass
class TrialRecord:
    trial: int
    status: str
    detections: list[int]
    error: str = ""
    stages: dict = field(default_factory=dict)
    steps: list[float] = field(default_factory=list)


@dataclass
class OccurrenceMap:
    """Per-cell detection counts over trials, with the snapped truth cells."""

    grid: ParamGrid
    counts: np.ndarray
    truth: list[int]
    trials: int = 0

    @classmethod
    def empty(cls, grid: ParamGrid, truth) -> "OccurrenceMap":
        return cls(grid, np.zeros(grid.size, dtype=np.int64), sorted(set(truth)))

    def add(self, detections) -> None:
        cells = sorted(set(detections))
        if len(cells) != len(detections):
            raise ValueError("a trial reported the same cell twice")
        self.counts[cells] += 1
        self.trials += 1


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    occurrence: OccurrenceMap
    records: list[TrialRecord]
    snaps: list[dict]

    @property
    def failures(self) -> int:
        return sum(r.status != "ok" for r in self.records)

    def summary(self) -> dict:
        truth = set(self.occurrence.truth)
        all_truth = sum(truth <= set(r.detections) for r in self.records)
        false = sum(bool(set(r.detections) - truth) for r in self.records)
        return {"trials": len(self.records), "failed_trials": self.failures,
                "trials_all_truth_detected": all_truth, "trials_with_false_cells": false}


def experiment_grid(cfg: ExperimentConfig) -> ParamGrid:
    g = cfg.grid
    return ParamGrid.full(np.deg2rad(g.angle_deg.values()), g.velocity_mps.values(), g.range_m.values())


def snap_truth(cfg: ExperimentConfig, grid: ParamGrid) -> tuple[list[int], list[dict]]:
    """Nearest grid cell per target; warns and records the offset when off-grid."""
    axes = (grid.angle_axis, grid.velocity_axis, grid.range_axis)
    cells, snaps = [], []
    for k, t in enumerate(cfg.targets):
        true = (math.radians(t.angle_deg), t.speed_mps, t.range_m)
        snapped = tuple(float(ax[np.argmin(np.abs(ax - x))]) for ax, x in zip(axes, true))
        offset = [s - x for s, x in zip(snapped, true)]
        snaps.append({"target": k, "angle_rad": offset[0], "velocity_mps": offset[1], "range_m": offset[2]})
        if any(abs(o) > SNAP_TOL * max(1.0, abs(x)) for o, x in zip(offset, true)):
            warnings.warn(f"target {k} is off-grid; snapped by (angle {math.degrees(offset[0]):.4g} deg, "
                          f"velocity {offset[1]:.4g} m/s, range {offset[2]:.4g} m)", TruthSnapWarning, stacklevel=2)
        cells.append(grid.index(snapped) if grid.contains(snapped) else None)
    return [c for c in cells if c is not None], snaps


def trial_seed(master_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, trial])


def solver_noise_power(cfg: ExperimentConfig) -> float:
    """White fast-time power handed to the lambda rule: thermal plus jammers."""
    L = cfg.scenario.samples_per_pulse
    return cfg.scenario.noise_power + sum(j.amplitude ** 2 for j in cfg.jammers) / L


def draw_system(cfg: ExperimentConfig, trial: int) -> RadarSystem:
    """Node placement, waveforms, measurement matrices and schedule for one trial."""
    draw_ss, noise_ss = trial_seed(cfg.experiment.master_seed, trial).spawn(2)
    rng = np.random.default_rng(draw_ss)
    sc, sch = cfg.scenario, cfg.schedule
    tx = place_nodes_uniform_disk(sc.n_tx, sc.disk_radius_m, rng)
    rx = place_nodes_uniform_disk(sc.n_rx, sc.disk_radius_m, rng)
    X = gen_orthogonal_qpsk(sc.samples_per_pulse, sc.n_tx, rng, sc.symbol_interval_s)
    phis = tuple(gaussian_measurement_matrix(sc.compression, sc.n_tx, rng, l) for l in range(sc.n_rx))
    schedule = make_schedule(sch.mode, sch.pulse_count, sch.pulse_interval_s, sc.carrier_hz, rng, step=sch.step,
                             step_min=sch.step_min, step_max=sch.step_max, leading_constant=sch.leading_constant)
    targets = [Target(math.radians(t.angle_deg), t.speed_mps, t.range_m) for t in cfg.targets]
    jammers = [Jammer(j.range_m, math.radians(j.azimuth_deg), j.amplitude) for j in cfg.jammers]
    noise_seed = int(noise_ss.generate_state(1)[0])
    scenario = Scenario(tx, rx, targets, jammers, sc.noise_power, sc.carrier_hz, noise_seed)
    return RadarSystem(scenario, schedule, X, phis)


def _solver(cfg: ExperimentConfig, threshold: float) -> SolverConfig:
    est = cfg.estimator
    return SolverConfig(method=est.solver, kappa=est.kappa, threshold=threshold, noise_power=solver_noise_power(cfg))


def estimate(cfg: ExperimentConfig, system: RadarSystem, cube: np.ndarray, grid: ParamGrid):
    est = cfg.estimator
    if est.mode == "joint":
        return estimate_joint(system, cube, grid, _solver(cfg, est.threshold))
    dc = DecoupledConfig(est.nc, est.ns, grid.angle_axis, grid.velocity_axis, grid.range_axis,
                         step1_pulses=est.step1_pulses or None,
                         step1_solver=_solver(cfg, est.step1_threshold),
                         step2_solver=_solver(cfg, est.step2_threshold),
                         step3_solver=_solver(cfg, est.step3_threshold))
    return estimate_decoupled(system, cube, dc)


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    grid = experiment_grid(cfg)
    system = draw_system(cfg, trial)
    steps = [float(s) for s in system.schedule.steps]
    cube = synthesize(system.scenario, system.schedule, system.waveform, system.phis)
    try:
        result = estimate(cfg, system, cube, grid)
    except TRIAL_ERRORS as exc:
        log.info("trial %d failed: %s", trial, exc)
        return TrialRecord(trial, "failed", [], f"{type(exc).__name__}: {exc}", steps=steps)
    cells = sorted({grid.index(p) for p in result.triples})
    return TrialRecord(trial, "ok", cells, stages=result.stages, steps=steps)


def _run_one(args):
    cfg, trial = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruthSnapWarning)
        return run_trial(cfg, trial)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """All trials of ``cfg``; reproducible from (config, master seed) at any worker count."""
    grid = experiment_grid(cfg)
    truth, snaps = snap_truth(cfg, grid)
    workers = cfg.experiment.workers if workers is None else workers
    jobs = [(cfg, t) for t in range(cfg.experiment.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]
    records.sort(key=lambda r: r.trial)
    if all(r.status != "ok" for r in records):
        raise ExperimentError(f"all {len(records)} trials failed; first error: {records[0].error}")
    occ = OccurrenceMap.empty(grid, truth)
    for r in records:
        occ.add(r.detections)
    return ExperimentResult(cfg, occ, records, snaps)
