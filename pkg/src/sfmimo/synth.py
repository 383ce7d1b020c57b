"""Compressed baseband samples at each receive node, one pulse at a time.

Every pulse uses the full range phase ``-2 d0 f_m / c``. Under a constant
carrier that phase is identical for every (receiver, pulse) pair, so this is
the same model as folding it into the reflection coefficient.

Randomness for noise and jammer waveforms is keyed on (seed, pulse[, rx]) so
pulses can be synthesised in any order, or in parallel, with identical output.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .scene import SPEED_OF_LIGHT, Scenario, eta, eta_all
from .waveform import PulseSchedule, WaveformMatrix

SLOW_TARGET_LIMIT = 0.1

_NOISE_STREAM = 1
_JAMMER_STREAM = 2


class SlowTargetWarning(UserWarning):
    """Intra-pulse Doppler is no longer negligible."""


@dataclass(frozen=True)
class MeasurementMatrix:
    entries: np.ndarray
    rx_index: int = 0

    @property
    def compression(self) -> int:
        return self.entries.shape[0]

    def composed(self, X: WaveformMatrix) -> np.ndarray:
        """Phi X^H, the M x L matrix applied to raw fast-time samples."""
        return self.entries @ X.entries.conj().T


@dataclass(frozen=True)
class PulseMeasurement:
    rx_index: int
    pulse_index: int
    samples: np.ndarray


def gaussian_measurement_matrix(M: int, Mt: int, rng: np.random.Generator, rx_index: int = 0) -> MeasurementMatrix:
    """Circular complex Gaussian M x Mt matrix with entry variance 1/M."""
    if M < 1 or M > Mt:
        raise ValueError(f"need 1 <= M <= Mt, got M={M}, Mt={Mt}")
    scale = 1.0 / math.sqrt(2.0 * M)
    entries = scale * (rng.standard_normal((M, Mt)) + 1j * rng.standard_normal((M, Mt)))
    return MeasurementMatrix(entries, rx_index)


def doppler_diagonal(doppler_freq, L: int, Ts: float) -> np.ndarray:
    """Diagonal of D(f); broadcasts over an array of Doppler frequencies (last axis is fast time)."""
    doppler_freq = np.asarray(doppler_freq, dtype=float)
    fast_time = np.arange(L) * Ts
    return np.exp(2j * np.pi * doppler_freq[..., None] * fast_time)


def doppler_matrix(doppler_freq: float, L: int, Ts: float) -> np.ndarray:
    if L < 1:
        raise ValueError("L must be >= 1")
    return np.diag(doppler_diagonal(doppler_freq, L, Ts))


def steering_vector(carrier: float, tx_nodes, theta: float) -> np.ndarray:
    return np.exp(2j * np.pi * carrier / SPEED_OF_LIGHT * eta_all(tx_nodes, theta))


def target_phase_cycles(scenario: Scenario, schedule: PulseSchedule, target, l: int, m: int) -> float:
    """Phase of target ``target`` at receiver ``l`` in pulse ``m``, in cycles.

    Range, receive-geometry and inter-pulse Doppler contributions.
    """
    fm = schedule.carrier_of(m)
    rx = scenario.rx_nodes[l]
    return (
        -2.0 * target.initial_range * fm / SPEED_OF_LIGHT
        + eta(rx, target.azimuth) * fm / SPEED_OF_LIGHT
        + 2.0 * target.speed * fm / SPEED_OF_LIGHT * m * schedule.repetition_interval
    )


def _pulse_rng(seed: int, stream: int, *index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, stream, *index])


def _complex_gaussian(rng: np.random.Generator, n: int, power: float) -> np.ndarray:
    return math.sqrt(power / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def jammer_waveform(seed: int, j: int, m: int, L: int) -> np.ndarray:
    """Waveform of jammer ``j`` in pulse ``m`` before amplitude scaling.

    Per-sample power 1/L, matching one transmit waveform column, so the
    jammer amplitude is measured against a transmit waveform. Shared by all
    receivers.
    """
    return _complex_gaussian(_pulse_rng(seed, _JAMMER_STREAM, j, m), L, 1.0 / L)


def thermal_noise(seed: int, l: int, m: int, L: int, power: float) -> np.ndarray:
    return _complex_gaussian(_pulse_rng(seed, _NOISE_STREAM, l, m), L, power)


def check_slow_targets(scenario: Scenario, schedule: PulseSchedule, X: WaveformMatrix) -> float:
    """Largest f_mk * Ts * L over targets and pulses; warns above the limit."""
    if not scenario.targets:
        return 0.0
    fmax = float(np.max(schedule.carriers))
    vmax = max(abs(t.speed) for t in scenario.targets)
    worst = 2.0 * vmax * fmax / SPEED_OF_LIGHT * X.pulse_duration
    if worst >= SLOW_TARGET_LIMIT:
        warnings.warn(
            f"slow-target condition violated: f_mk*Ts*L = {worst:.3g} >= {SLOW_TARGET_LIMIT}",
            SlowTargetWarning,
            stacklevel=2,
        )
    return worst


def synthesize_pulse(scenario: Scenario, schedule: PulseSchedule, X: WaveformMatrix, phi: MeasurementMatrix,
                     l: int, m: int, seed: int | None = None, *, noiseless: bool = False,
                     check: bool = True) -> PulseMeasurement:
    """Compressed samples of receiver ``l`` during pulse ``m`` (both 0-based).

    ``seed`` keys the jammer and thermal-noise substreams; it defaults to
    ``scenario.seed``.
    """
    if not 0 <= l < scenario.n_rx:
        raise IndexError(f"receiver index {l} out of range [0, {scenario.n_rx})")
    if not 0 <= m < schedule.pulse_count:
        raise IndexError(f"pulse index {m} out of range [0, {schedule.pulse_count})")
    if X.n_tx != scenario.n_tx or phi.entries.shape[1] != scenario.n_tx:
        raise ValueError("waveform / measurement matrix do not match the transmit node count")
    if check:
        check_slow_targets(scenario, schedule, X)
    seed = scenario.seed if seed is None else seed
    Xe = X.entries
    L = X.samples_per_pulse
    fm = schedule.carrier_of(m)

    # fast-time echo summed over targets, then one projection onto the waveforms
    echo = np.zeros(L, dtype=complex)
    for target in scenario.targets:
        v = steering_vector(fm, scenario.tx_nodes, target.azimuth)
        d = doppler_diagonal(target.doppler(fm), L, X.symbol_interval)
        phase = np.exp(2j * np.pi * target_phase_cycles(scenario, schedule, target, l, m))
        echo += target.reflection * phase * (d * (Xe @ v))

    if not noiseless:
        rx = scenario.rx_nodes[l]
        for j, jam in enumerate(scenario.jammers):
            if jam.amplitude == 0:
                continue
            phase = np.exp(-2j * np.pi * (jam.range - eta(rx, jam.azimuth)) * fm / SPEED_OF_LIGHT)
            echo += phase * jam.amplitude * jammer_waveform(seed, j, m, L)
        if scenario.noise_power > 0:
            echo += thermal_noise(seed, l, m, L, scenario.noise_power)

    samples = phi.entries @ (Xe.conj().T @ echo)
    return PulseMeasurement(l, m, samples)


def synthesize(scenario: Scenario, schedule: PulseSchedule, X: WaveformMatrix, phis, pulses=None,
               seed: int | None = None, *, noiseless: bool = False) -> np.ndarray:
    """Data cube of shape (Nr, len(pulses), M) for the requested pulses."""
    pulses = range(schedule.pulse_count) if pulses is None else list(pulses)
    check_slow_targets(scenario, schedule, X)
    cube = np.stack([
        np.stack([
            synthesize_pulse(scenario, schedule, X, phis[l], l, m, seed, noiseless=noiseless, check=False).samples
            for m in pulses
        ])
        for l in range(scenario.n_rx)
    ])
    return cube


def fuse(cube: np.ndarray) -> np.ndarray:
    """Stack a (Nr, Np, M) cube into the receiver-major fused vector."""
    return cube.reshape(-1)


def compressed_noise_std(scenario: Scenario, X: WaveformMatrix, M: int) -> float:
    """Per-entry standard deviation of jammer plus thermal noise after compression.

    Phi X^H maps white fast-time noise of power p to entries of variance
    p * Mt / M (orthonormal X, Phi entry variance 1/M).
    """
    jam_power = sum(j.amplitude ** 2 for j in scenario.jammers) / X.samples_per_pulse
    return math.sqrt((scenario.noise_power + jam_power) * X.n_tx / M)

