"""Joint and decoupled (angle -> velocity -> range) target estimation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import unambiguous_velocity
from .scene import Scenario
from .sensing import (DEFAULT_MAX_ENTRIES, MemoryBudgetError, ParamGrid, SensingMatrix, build_sensing_matrix,
                      correlation_noise_std)
from .solver import RecoveryResult, dantzig_selector, default_lambda, l1_first_order
from .synth import MeasurementMatrix
from .waveform import PulseSchedule, WaveformMatrix

log = logging.getLogger(__name__)


class EstimationError(RuntimeError):
    """A pipeline stage produced nothing to hand to the next one."""


@dataclass(frozen=True)
class RadarSystem:
    """What the fusion centre knows: geometry, carrier, waveforms, schedule and
    measurement matrices. Targets on ``scenario`` are never read here."""

    scenario: Scenario
    schedule: PulseSchedule
    waveform: WaveformMatrix
    phis: tuple[MeasurementMatrix, ...]
    max_entries: int = DEFAULT_MAX_ENTRIES


@dataclass(frozen=True)
class SolverConfig:
    method: str = "dantzig"
    kappa: float = 1.0
    threshold: float = 0.5
    top_k: int | None = None
    noise_power: float = 0.0
    lambda_floor: float = 1e-6
    fixed_lambda: float | None = None

    def lam(self, theta, r, phis=None) -> float:
        """Dantzig bound for this problem.

        ``noise_power`` is the white fast-time power (thermal plus jammer) per
        sample; with the measurement matrices the exact per-column std of the
        correlated noise is used. A floor relative to max |Theta^H r| keeps the
        bound positive on noiseless data.
        """
        if self.fixed_lambda is not None:
            return self.fixed_lambda
        A = theta.entries if isinstance(theta, SensingMatrix) else np.asarray(theta)
        z = np.abs(A.conj().T @ r)
        floor = self.lambda_floor * float(z.max()) if z.size else 0.0
        if self.noise_power <= 0:
            return floor
        if isinstance(theta, SensingMatrix) and phis is not None:
            std = correlation_noise_std(theta, phis, self.noise_power)
        else:
            std = np.sqrt(self.noise_power)
        return max(default_lambda(A, std, self.kappa), floor)

    def solve(self, theta, r, phis=None) -> RecoveryResult:
        A = theta.entries if isinstance(theta, SensingMatrix) else np.asarray(theta)
        lam = self.lam(theta, r, phis)
        if self.method == "dantzig":
            return dantzig_selector(A, r, lam, threshold=self.threshold, top_k=self.top_k)
        if self.method == "ista":
            return l1_first_order(A, r, lam, threshold=self.threshold, top_k=self.top_k)
        raise ValueError(f"unknown solver method {self.method!r}")


@dataclass
class EstimateSet:
    angles: list[float] = field(default_factory=list)
    pairs: list[tuple[float, float]] = field(default_factory=list)
    triples: list[tuple[float, float, float]] = field(default_factory=list)
    stages: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DecoupledConfig:
    """Nc constant-carrier pulses followed by Ns stepped pulses.

    ``step1_pulses`` default to the first and last constant pulse.
    """

    Nc: int
    Ns: int
    angle_axis: np.ndarray
    velocity_axis: np.ndarray
    range_axis: np.ndarray
    step1_pulses: tuple[int, ...] | None = None
    step1_solver: SolverConfig = SolverConfig()
    step2_solver: SolverConfig = SolverConfig()
    step3_solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.Nc < 1 or self.Ns < 1:
            raise ValueError("need Nc >= 1 and Ns >= 1")
        pulses = self.step1_pulses
        if pulses is None:
            pulses = tuple(sorted({0, self.Nc - 1}))
        pulses = tuple(int(p) for p in pulses)
        if not pulses or any(not 0 <= p < self.Nc for p in pulses):
            raise ValueError("step-1 pulses must come from the constant-carrier block")
        object.__setattr__(self, "step1_pulses", pulses)

    @property
    def constant_pulses(self) -> tuple[int, ...]:
        return tuple(range(self.Nc))

    @property
    def stepped_pulses(self) -> tuple[int, ...]:
        return tuple(range(self.Nc, self.Nc + self.Ns))


def _fused(cube: np.ndarray, pulses) -> np.ndarray:
    return cube[:, list(pulses), :].reshape(-1)


def _solve_on(system: RadarSystem, cube, grid: ParamGrid, pulses, solver: SolverConfig):
    theta = build_sensing_matrix(grid, system.scenario, system.schedule, system.waveform, system.phis, pulses,
                                 system.max_entries)
    r = _fused(cube, pulses)
    result = solver.solve(theta, r, system.phis)
    detected = [grid.point(n) for n, _ in result.support]
    return detected, result


def _diag(result: RecoveryResult, grid: ParamGrid, pulses) -> dict:
    d = {k: v for k, v in result.diagnostics.items() if k != "objective"}
    d.update(grid_size=grid.size, pulses=list(pulses), lam=result.lam, residual_norm=result.residual_norm,
             support=[[n, mag] for n, mag in result.support])
    return d


def unambiguous_window(velocity_axis, schedule: PulseSchedule, pulses) -> np.ndarray:
    """Velocity cells inside [v0, v0 + V_u) for the pulses' sub-schedule.

    Cells beyond produce (up to intra-pulse Doppler) the same columns as
    cells inside, so they are dropped rather than left to split the solution.
    """
    axis = np.asarray(velocity_axis, dtype=float)
    vu = unambiguous_velocity(schedule.subset(pulses)).value
    if math.isinf(vu):
        return axis
    keep = axis < axis[0] + vu - 1e-9
    return axis[keep]


def step1_angles(system: RadarSystem, cube: np.ndarray, pulses, angle_axis, solver: SolverConfig = SolverConfig()):
    """Angle-only solve on each single pulse; returns (sorted union of angles, per-pulse diagnostics).

    Within one constant-carrier pulse the range and inter-pulse Doppler phases
    are common to all receivers, so velocity and range are anchored at zero.
    """
    grid = ParamGrid.along("angle", angle_axis, [(0.0, 0.0, 0.0)])
    union: set[float] = set()
    diags = []
    for m in pulses:
        detected, result = _solve_on(system, cube, grid, [m], solver)
        angles = {p[0] for p in detected}
        diags.append({"pulse": int(m), "angles": sorted(angles), **_diag(result, grid, [m])})
        union |= angles
    return sorted(union), diags


def step2_velocity(system: RadarSystem, cube: np.ndarray, pulses, angles, velocity_axis,
                   solver: SolverConfig = SolverConfig()):
    """(angle, velocity) pairs from the constant-carrier block; range anchored at zero."""
    if not angles:
        raise EstimationError("step 2 needs at least one angle estimate")
    axis = unambiguous_window(velocity_axis, system.schedule, pulses)
    grid = ParamGrid.along("velocity", axis, [(a, 0.0, 0.0) for a in angles])
    detected, result = _solve_on(system, cube, grid, pulses, solver)
    pairs = sorted({(p[0], p[1]) for p in detected})
    return pairs, _diag(result, grid, pulses)


def step3_range(system: RadarSystem, cube: np.ndarray, pulses, pairs, range_axis,
                solver: SolverConfig = SolverConfig()):
    """(angle, velocity, range) triples from the stepped block."""
    if not pairs:
        raise EstimationError("step 3 needs at least one (angle, velocity) estimate")
    carriers = {system.schedule.carrier_of(m) for m in pulses}
    if len(carriers) < 2:
        raise ValueError("range is unidentifiable: the stepped block has a single carrier")
    grid = ParamGrid.along("range", range_axis, [(a, b, 0.0) for a, b in pairs])
    detected, result = _solve_on(system, cube, grid, pulses, solver)
    return sorted(set(detected)), _diag(result, grid, pulses)


def estimate_decoupled(system: RadarSystem, cube: np.ndarray, config: DecoupledConfig) -> EstimateSet:
    if system.schedule.pulse_count < config.Nc + config.Ns:
        raise ValueError("schedule is shorter than Nc + Ns")
    if not system.schedule.is_constant(config.constant_pulses):
        raise ValueError("the first Nc pulses must share one carrier")
    out = EstimateSet()
    angles, d1 = step1_angles(system, cube, config.step1_pulses, config.angle_axis, config.step1_solver)
    out.angles = angles
    out.stages["step1"] = d1
    if not angles:
        raise EstimationError("step 1 detected no angle on any pulse")
    pairs, d2 = step2_velocity(system, cube, config.constant_pulses, angles, config.velocity_axis,
                               config.step2_solver)
    out.pairs = pairs
    out.stages["step2"] = d2
    if not pairs:
        raise EstimationError("step 2 detected no (angle, velocity) pair")
    triples, d3 = step3_range(system, cube, config.stepped_pulses, pairs, config.range_axis, config.step3_solver)
    out.triples = triples
    out.stages["step3"] = d3
    out.stages["sizes"] = {"A": len(config.step1_pulses), "B": len(angles), "C": len(pairs)}
    log.debug("decoupled: %d angles, %d pairs, %d triples", len(angles), len(pairs), len(triples))
    return out


def estimate_joint(system: RadarSystem, cube: np.ndarray, grid: ParamGrid, solver: SolverConfig = SolverConfig(),
                   pulses=None) -> EstimateSet:
    """One sparse solve over a full angle x velocity x range grid."""
    pulses = tuple(range(cube.shape[1]) if pulses is None else pulses)
    if grid.active_dims != ("angle", "velocity", "range"):
        raise ValueError("joint estimation needs a full three-dimensional grid")
    if system.schedule.is_constant(pulses):
        if grid.range_axis.size > 1:
            raise ValueError("range is unidentifiable with a constant carrier; use a single range cell")
        window = unambiguous_window(grid.velocity_axis, system.schedule, pulses)
        if window.size < grid.velocity_axis.size:
            grid = ParamGrid.full(grid.angle_axis, window, grid.range_axis)
    if np.allclose(cube, 0):
        return EstimateSet(stages={"joint": {"grid_size": grid.size, "status": "zero_data"}})
    try:
        detected, result = _solve_on(system, cube, grid, pulses, solver)
    except MemoryBudgetError as exc:
        raise MemoryBudgetError(f"{exc}. Joint estimation does not fit; use the decoupled mode.") from exc
    out = EstimateSet(triples=sorted(set(detected)))
    out.angles = sorted({t[0] for t in out.triples})
    out.pairs = sorted({(t[0], t[1]) for t in out.triples})
    out.stages["joint"] = _diag(result, grid, pulses)
    return out


def decoupled_complexity(Na: int, Nb: int, Nc: int, A: int, B: int, C: int) -> tuple[float, float, float]:
    """Cubic cost models: (joint, decoupled, decoupled / joint).

    joint = (Na Nb Nc)^3, decoupled = A Na^3 + (B Nb)^3 + (C Nc)^3.
    """
    for name, v in dict(Na=Na, Nb=Nb, Nc=Nc, A=A, B=B, C=C).items():
        if v < 1:
            raise ValueError(f"{name} must be a positive integer")
    joint = float(Na * Nb * Nc) ** 3
    decoupled = float(A) * Na ** 3 + float(B * Nb) ** 3 + float(C * Nc) ** 3
    return joint, decoupled, decoupled / joint
