"""Experiment configuration: INI files with unit-suffixed keys.

Every float is written with ``repr`` so ``loads(dumps(cfg)) == cfg`` holds
exactly. Missing sections and keys take the dataclass defaults; unknown
keys are rejected so typos do not pass silently.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

# sections a manifest may carry on top of the config proper
RUN_SECTIONS = ("run", "policy", "summary", "truth")
ESTIMATOR_MODES = ("joint", "decoupled")
SOLVERS = ("dantzig", "ista")


class ConfigError(ValueError):
    """The configuration text or its values are invalid."""


@dataclass(frozen=True)
class AxisSpec:
    """Uniform axis from ``start`` to ``stop`` inclusive."""

    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop) and math.isfinite(self.step)):
            raise ConfigError("axis bounds must be finite")
        if self.step <= 0:
            raise ConfigError(f"axis step must be > 0, got {self.step}")
        if self.stop < self.start:
            raise ConfigError(f"axis stop {self.stop} is below start {self.start}")

    @property
    def count(self) -> int:
        return int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)


@dataclass(frozen=True)
class ScenarioSpec:
    n_tx: int = 30
    n_rx: int = 30
    compression: int = 30
    disk_radius_m: float = 10.0
    snr_db: float = 0.0
    carrier_hz: float = 5e9
    samples_per_pulse: int = 256
    symbol_interval_s: float = 2.5e-8

    @property
    def noise_power(self) -> float:
        """Thermal power per fast-time sample; a transmit sample carries 1/L."""
        return 10.0 ** (-self.snr_db / 10.0) / self.samples_per_pulse


@dataclass(frozen=True)
class TargetSpec:
    angle_deg: float
    speed_mps: float
    range_m: float


@dataclass(frozen=True)
class JammerSpec:
    range_m: float
    azimuth_deg: float
    amplitude: float


@dataclass(frozen=True)
class ScheduleSpec:
    mode: str = "constant"
    pulse_count: int = 10
    pulse_interval_s: float = 2.5e-4
    step: float = 0.0
    step_min: float = 0.0
    step_max: float = 0.0
    leading_constant: int = 0


@dataclass(frozen=True)
class GridSpec:
    angle_deg: AxisSpec = AxisSpec(0.0, 0.0, 0.5)
    velocity_mps: AxisSpec = AxisSpec(0.0, 0.0, 5.0)
    range_m: AxisSpec = AxisSpec(1000.0, 1000.0, 50.0)


@dataclass(frozen=True)
class EstimatorSpec:
    mode: str = "joint"
    solver: str = "dantzig"
    kappa: float = 1.0
    threshold: float = 0.5
    nc: int = 0
    ns: int = 0
    step1_pulses: tuple[int, ...] = ()
    step1_threshold: float = 0.5
    step2_threshold: float = 0.5
    step3_threshold: float = 0.5


@dataclass(frozen=True)
class RunSpec:
    trials: int = 1
    master_seed: int = 0
    workers: int = 1
    output_dir: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec = ScenarioSpec()
    targets: tuple[TargetSpec, ...] = ()
    jammers: tuple[JammerSpec, ...] = ()
    schedule: ScheduleSpec = ScheduleSpec()
    grid: GridSpec = GridSpec()
    estimator: EstimatorSpec = EstimatorSpec()
    experiment: RunSpec = field(default_factory=RunSpec)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "jammers", tuple(self.jammers))
        problems = validate_config(self)
        if problems:
            raise ConfigError("; ".join(problems))

    def with_overrides(self, *, seed: int | None = None, trials: int | None = None,
                       output_dir: str | None = None, workers: int | None = None) -> "ExperimentConfig":
        run = self.experiment
        changes = {k: v for k, v in dict(master_seed=seed, trials=trials, output_dir=output_dir,
                                          workers=workers).items() if v is not None}
        return replace(self, experiment=replace(run, **changes))


def validate_config(cfg: ExperimentConfig) -> list[str]:
    """Value-level problems; structural ones are caught while parsing."""
    out = []
    sc, sch, est, run = cfg.scenario, cfg.schedule, cfg.estimator, cfg.experiment
    if min(sc.n_tx, sc.n_rx, sc.compression) < 1:
        out.append("node counts and compression must be >= 1")
    if sc.samples_per_pulse < sc.n_tx:
        out.append("samples_per_pulse must be >= n_tx for orthonormal waveforms")
    if sc.disk_radius_m <= 0 or sc.carrier_hz <= 0 or sc.symbol_interval_s <= 0:
        out.append("disk radius, carrier and symbol interval must be > 0")
    if sch.mode not in ("constant", "linear", "random"):
        out.append(f"unknown schedule mode {sch.mode!r}")
    if sch.pulse_count < 1 or sch.pulse_interval_s <= 0:
        out.append("schedule needs pulse_count >= 1 and pulse_interval_s > 0")
    if not 0 <= sch.leading_constant <= sch.pulse_count:
        out.append("leading_constant must lie in [0, pulse_count]")
    if sch.mode == "random" and not 0 < sch.step_min < sch.step_max < 1:
        out.append("random schedule needs 0 < step_min < step_max < 1")
    if sch.mode == "linear" and sch.step <= 0:
        out.append("linear schedule needs step > 0")
    if est.mode not in ESTIMATOR_MODES:
        out.append(f"estimator mode must be one of {ESTIMATOR_MODES}")
    if est.solver not in SOLVERS:
        out.append(f"solver must be one of {SOLVERS}")
    if est.mode == "decoupled":
        if est.nc < 1 or est.ns < 1:
            out.append("decoupled mode needs nc >= 1 and ns >= 1")
        elif est.nc + est.ns > sch.pulse_count:
            out.append("nc + ns exceeds pulse_count")
        elif sch.mode == "constant":
            out.append("decoupled mode needs a stepped schedule to resolve range")
        elif sch.leading_constant < est.nc:
            out.append("the first nc pulses must be constant-carrier (leading_constant >= nc)")
        if any(not 0 <= p < max(est.nc, 1) for p in est.step1_pulses):
            out.append("step1_pulses must index the constant-carrier block")
    for name in ("threshold", "step1_threshold", "step2_threshold", "step3_threshold"):
        if not 0 < getattr(est, name) <= 1:
            out.append(f"{name} must lie in (0, 1]")
    if est.kappa <= 0:
        out.append("kappa must be > 0")
    if run.trials < 1:
        out.append("trials must be >= 1")
    if run.workers < 1:
        out.append("workers must be >= 1")
    for j in cfg.jammers:
        if j.amplitude < 0 or j.range_m <= 0:
            out.append("jammer amplitude must be >= 0 and range > 0")
    for t in cfg.targets:
        if t.range_m <= 0:
            out.append("target range must be > 0")
    return out


# --- serialization -----------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _parse(text: str, like, key: str):
    try:
        if isinstance(like, bool):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, tuple):
            return tuple(int(x) for x in text.split(",") if x.strip())
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list for {key!r}: {text!r}") from exc


def _flat_section(parser, name: str, cls):
    defaults = cls()
    if not parser.has_section(name):
        return defaults
    known = {f.name for f in fields(cls)}
    extra = set(parser[name]) - known
    if extra:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    kw = {k: _parse(v, getattr(defaults, k), f"{name}.{k}") for k, v in parser[name].items()}
    return cls(**kw)


def _columns(parser, name: str, cols: dict[str, str], cls):
    """Parallel comma-separated lists, one entry per object."""
    if not parser.has_section(name):
        return ()
    extra = set(parser[name]) - set(cols)
    if extra:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    lists = {attr: _floats(parser[name].get(key, ""), f"{name}.{key}") for key, attr in cols.items()}
    lengths = {len(v) for v in lists.values()}
    if len(lengths) > 1:
        raise ConfigError(f"[{name}] lists have different lengths")
    n = lengths.pop() if lengths else 0
    return tuple(cls(**{attr: lists[attr][i] for attr in lists}) for i in range(n))


_TARGET_KEYS = {"angles_deg": "angle_deg", "speeds_mps": "speed_mps", "ranges_m": "range_m"}
_JAMMER_KEYS = {"ranges_m": "range_m", "azimuths_deg": "azimuth_deg", "amplitudes": "amplitude"}
_AXES = {"angle_deg": "angle", "velocity_mps": "velocity", "range_m": "range"}


def _axis_keys(attr: str) -> tuple[str, str, str]:
    prefix, unit = _AXES[attr], attr.split("_", 1)[1]
    return tuple(f"{prefix}_{part}_{unit}" for part in ("start", "stop", "step"))


def _grid(parser) -> GridSpec:
    defaults = GridSpec()
    if not parser.has_section("grid"):
        return defaults
    sec = parser["grid"]
    known = {k for attr in _AXES for k in _axis_keys(attr)}
    extra = set(sec) - known
    if extra:
        raise ConfigError(f"unknown key(s) in [grid]: {', '.join(sorted(extra))}")
    axes = {}
    for attr in _AXES:
        d = getattr(defaults, attr)
        k0, k1, k2 = _axis_keys(attr)
        start = float(sec.get(k0, repr(d.start)))
        axes[attr] = AxisSpec(start, float(sec.get(k1, repr(start))), float(sec.get(k2, repr(d.step))))
    return GridSpec(**axes)


def loads(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    allowed = {"scenario", "targets", "jammers", "schedule", "grid", "estimator", "experiment", *RUN_SECTIONS}
    unknown = set(parser.sections()) - allowed
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    return ExperimentConfig(
        scenario=_flat_section(parser, "scenario", ScenarioSpec),
        targets=_columns(parser, "targets", _TARGET_KEYS, TargetSpec),
        jammers=_columns(parser, "jammers", _JAMMER_KEYS, JammerSpec),
        schedule=_flat_section(parser, "schedule", ScheduleSpec),
        grid=_grid(parser),
        estimator=_flat_section(parser, "estimator", EstimatorSpec),
        experiment=_flat_section(parser, "experiment", RunSpec),
    )


def to_parser(cfg: ExperimentConfig) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    for name in ("scenario", "schedule", "estimator", "experiment"):
        obj = getattr(cfg, name)
        parser[name] = {f.name: _fmt(getattr(obj, f.name)) for f in fields(obj)}
    parser["targets"] = {key: _fmt(tuple(getattr(t, attr) for t in cfg.targets))
                         for key, attr in _TARGET_KEYS.items()}
    parser["jammers"] = {key: _fmt(tuple(getattr(j, attr) for j in cfg.jammers))
                         for key, attr in _JAMMER_KEYS.items()}
    grid = {}
    for attr in _AXES:
        ax = getattr(cfg.grid, attr)
        for key, val in zip(_axis_keys(attr), (ax.start, ax.stop, ax.step)):
            grid[key] = _fmt(val)
    parser["grid"] = grid
    return parser


def dumps(cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    to_parser(cfg).write(buf)
    return buf.getvalue()


def bundled_configs() -> list[str]:
    root = resources.files("sfmimo.harness") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def load(path: str | Path) -> ExperimentConfig:
    """Read a config file; a bare name of a bundled config also resolves."""
    p = Path(path)
    if p.is_file():
        return loads(p.read_text(encoding="utf-8"))
    bundled = resources.files("sfmimo.harness") / "configs" / p.name
    if p.parent == Path(".") and bundled.is_file():
        return loads(bundled.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"config file not found: {path}")
