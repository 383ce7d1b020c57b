"""Orthogonal transmit waveforms and carrier-frequency step schedules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QPSK_PHASES = np.array([1, 3, 5, 7]) * np.pi / 4
MODES = ("constant", "linear", "random")


@dataclass(frozen=True)
class WaveformMatrix:
    """L x Mt transmit waveforms, one orthonormal column per transmitter."""

    entries: np.ndarray
    symbol_interval: float = 1e-7

    @property
    def samples_per_pulse(self) -> int:
        return self.entries.shape[0]

    @property
    def n_tx(self) -> int:
        return self.entries.shape[1]

    @property
    def pulse_duration(self) -> float:
        return self.samples_per_pulse * self.symbol_interval

    def gram_error(self) -> float:
        X = self.entries
        return float(np.max(np.abs(X.conj().T @ X - np.eye(X.shape[1]))))


def gen_orthogonal_qpsk(L: int, Mt: int, rng: np.random.Generator, symbol_interval: float = 1e-7) -> WaveformMatrix:
    """Random QPSK columns, orthonormalised so that X^H X = I exactly.

    The QR factor is phase-corrected so each column keeps the direction of
    its QPSK draw (R has a positive real diagonal).
    """
    if Mt < 1 or L < Mt:
        raise ValueError(f"need L >= Mt >= 1 for orthonormal columns, got L={L}, Mt={Mt}")
    symbols = np.exp(1j * rng.choice(QPSK_PHASES, size=(L, Mt))) / np.sqrt(L)
    Q, R = np.linalg.qr(symbols)
    d = np.diag(R)
    Q = Q * (d / np.abs(d))[None, :]
    return WaveformMatrix(Q, symbol_interval)


@dataclass(frozen=True)
class PulseSchedule:
    """Pulse train with per-pulse carrier ``f * (1 + steps[m])``.

    The first ``leading_constant`` pulses always use the base carrier; ``mode``
    describes how the remaining steps were generated. A decoupled train
    (constant block followed by a random block) is ``mode="random"`` with
    ``leading_constant = Nc``.
    """

    pulse_count: int
    repetition_interval: float
    base_carrier: float
    steps: tuple[float, ...]
    mode: str = "constant"
    leading_constant: int = 0
    step_increment: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(float(s) for s in self.steps))
        if self.pulse_count < 1:
            raise ValueError("pulse_count must be >= 1")
        if len(self.steps) != self.pulse_count:
            raise ValueError(f"expected {self.pulse_count} steps, got {len(self.steps)}")
        if self.mode not in MODES:
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if any(not 0.0 <= s < 1.0 for s in self.steps):
            raise ValueError("frequency steps must lie in [0, 1)")

    @property
    def carriers(self) -> np.ndarray:
        return self.base_carrier * (1.0 + np.asarray(self.steps))

    def carrier_of(self, m: int) -> float:
        return self.base_carrier * (1.0 + self.steps[m])

    def is_constant(self, pulses=None) -> bool:
        steps = np.asarray(self.steps)
        if pulses is not None:
            steps = steps[list(pulses)]
        return bool(np.all(steps == steps[0]))

    def subset(self, pulses) -> "PulseSchedule":
        """Schedule restricted to ``pulses``, renumbered from zero (ambiguity analysis only)."""
        pulses = list(pulses)
        steps = [self.steps[m] for m in pulses]
        mode = "constant" if all(s == 0 for s in steps) else self.mode
        return PulseSchedule(len(steps), self.repetition_interval, self.base_carrier, steps, mode,
                             step_increment=self.step_increment)


def make_schedule(mode: str, Np: int, T: float, f: float, rng: np.random.Generator | None = None, *,
                  step: float = 0.0, step_min: float = 0.0, step_max: float = 0.0,
                  leading_constant: int = 0) -> PulseSchedule:
    """Build a schedule of ``leading_constant`` constant pulses plus ``Np - leading_constant``
    pulses stepped per ``mode``.

    linear: ``steps[m] = m * step`` counted from the first stepped pulse.
    random: i.i.d. uniform on ``[step_min, step_max]``, which must sit inside (0, 1).
    """
    if Np < 1:
        raise ValueError("Np must be >= 1")
    if not 0 <= leading_constant <= Np:
        raise ValueError("leading_constant must be within [0, Np]")
    n = Np - leading_constant
    if mode == "constant":
        tail = np.zeros(n)
    elif mode == "linear":
        if step <= 0:
            raise ValueError("linear mode needs a positive step")
        tail = np.arange(n) * step
        if n and tail[-1] >= 1:
            raise ValueError("linear steps exceed the admissible range [0, 1)")
    elif mode == "random":
        if not 0 < step_min < step_max < 1:
            raise ValueError(f"random steps need 0 < step_min < step_max < 1, got [{step_min}, {step_max}]")
        if rng is None:
            raise ValueError("random mode needs an rng")
        tail = rng.uniform(step_min, step_max, n)
    else:
        raise ValueError(f"unknown schedule mode {mode!r}")
    steps = np.concatenate([np.zeros(leading_constant), tail])
    return PulseSchedule(Np, T, f, tuple(steps), mode, leading_constant, step if mode == "linear" else 0.0)
