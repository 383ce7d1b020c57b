"""Range/velocity ambiguity, velocity-resolution correlation and the
sufficient conditions for step schedules to lower adjacent-cell correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .scene import SPEED_OF_LIGHT
from .sensing import SensingMatrix
from .waveform import PulseSchedule

PHASE_TOL = 1e-6
RATIONAL_TOL = 1e-9
DENOMINATOR_BOUND = 10 ** 6
SCAN_LIMIT = 10 ** 6
SINE_TOL = 1e-12


@dataclass
class Ambiguity:
    """Unambiguous extent. ``value`` is ``math.inf`` for the infinity marker.

    ``effective`` is the smallest exact phase coincidence found by the
    numeric scan (``None`` when none exists below ``scan_bound``).
    """

    value: float
    effective: float | None = None
    scan_bound: float | None = None
    note: str = ""

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def as_dict(self) -> dict:
        return {
            "value": "inf" if self.is_infinite else self.value,
            "effective": self.effective,
            "scan_bound": self.scan_bound,
            "note": self.note,
        }


@dataclass
class AmbiguityReport:
    mode: str
    unambiguous_range: Ambiguity
    unambiguous_velocity: Ambiguity

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "unambiguous_range_m": self.unambiguous_range.as_dict(),
            "unambiguous_velocity_mps": self.unambiguous_velocity.as_dict(),
        }


def _lattice_scan(base: float, weights: np.ndarray, limit: int = SCAN_LIMIT, tol: float = PHASE_TOL):
    """Smallest x = k * base / weights[0] (k = 1..limit) with x * weights / base integral
    for every weight to within ``tol`` cycles. ``weights[0]`` must be non-zero."""
    w = np.asarray(weights, dtype=float) / weights[0]
    chunk = 100_000
    for start in range(1, limit + 1, chunk):
        k = np.arange(start, min(start + chunk, limit + 1), dtype=float)
        cycles = k[:, None] * w[None, :]
        ok = np.all(np.abs(cycles - np.round(cycles)) <= tol, axis=1)
        if ok.any():
            return float(k[np.argmax(ok)] * base / weights[0])
    return None


def unambiguous_range(schedule: PulseSchedule) -> Ambiguity:
    """R_u by schedule mode.

    Range only enters through exp(-j 4 pi c f_m / c); two ranges alias when
    those factors agree up to one common phase, i.e. when
    2 dc f (step_m - step_0) / c is an integer for every pulse.
    """
    c, f, T = SPEED_OF_LIGHT, schedule.base_carrier, schedule.repetition_interval
    steps = np.asarray(schedule.steps)
    diffs = steps - steps[0]
    nz = diffs[np.abs(diffs) > 0]
    if schedule.mode == "constant" or nz.size == 0:
        return Ambiguity(c * T / 2.0, None, None,
                         "constant carrier: range phase common to all pulses; cT/2 is the pulse-timing limit")
    base = c / (2.0 * f)
    scan = _lattice_scan(base, nz)
    bound = SCAN_LIMIT * base / abs(nz[0])
    if schedule.mode == "linear":
        return Ambiguity(c / (2.0 * f * schedule.step_increment), scan, bound, "c / (2 f step)")
    return Ambiguity(math.inf, scan, bound, "random steps: no finite alias for large pulse counts")


def _rational(x: float) -> Fraction | None:
    fr = Fraction(x).limit_denominator(DENOMINATOR_BOUND)
    if abs(float(fr) - x) > RATIONAL_TOL * max(1.0, abs(x)):
        return None
    return fr


def unambiguous_velocity(schedule: PulseSchedule) -> Ambiguity:
    """V_u by schedule mode.

    constant: c / (2 f T). linear: least common multiple of c / (2 f_m T),
    computed exactly on rational approximations of the carrier ratios.
    random: infinity marker. Every result carries the exact-phase scan of
    exp(j 4 pi db f_m m T / c) over the pulses.
    """
    c, f, T = SPEED_OF_LIGHT, schedule.base_carrier, schedule.repetition_interval
    v0 = c / (2.0 * f * T)
    Np = schedule.pulse_count
    if Np == 1:
        return Ambiguity(math.inf, None, None, "single pulse: no inter-pulse phase to alias")
    ratios = 1.0 + np.asarray(schedule.steps)
    weights = ratios[1:] * np.arange(1, Np)
    scan = _lattice_scan(v0, weights)
    bound = SCAN_LIMIT * v0 / weights[0]
    if schedule.mode == "constant" or np.all(ratios == ratios[0]):
        return Ambiguity(v0 / ratios[0], scan, bound, "c / (2 f T)")
    if schedule.mode == "linear":
        lcm = 1
        for ratio in ratios:
            fr = _rational(float(ratio))
            if fr is None:
                return Ambiguity(math.inf, scan, bound, "no finite V_u below the rational search bound")
            lcm = math.lcm(lcm, fr.denominator)
            if lcm > DENOMINATOR_BOUND:
                return Ambiguity(math.inf, scan, bound, "no finite V_u below the rational search bound")
        # V_u / V_m = x * ratio_m must be integral for every pulse; x = lcm of denominators
        return Ambiguity(v0 * lcm, scan, bound, "least common multiple of c / (2 f_m T)")
    return Ambiguity(math.inf, scan, bound, "random steps: no finite alias for large pulse counts")


def ambiguity_report(schedule: PulseSchedule) -> AmbiguityReport:
    return AmbiguityReport(schedule.mode, unambiguous_range(schedule), unambiguous_velocity(schedule))


def velocity_resolution_alpha(delta_b: float, T: float, f: float) -> float:
    return 4.0 * math.pi * delta_b * T * f / SPEED_OF_LIGHT


def h_metric(steps, alpha: float) -> float:
    steps = np.asarray(steps, dtype=float)
    m = np.arange(steps.size)
    return float(abs(np.sum(np.exp(1j * alpha * (1.0 + steps) * m))))


@dataclass
class ConditionCheck:
    """Outcome of the two sufficient conditions.

    ``ratio_requirements`` lists (m, m', bound, holds) meaning
    steps[m] / steps[m'] >= bound with 1-based pulse numbers.
    """

    ratio_requirements: list[tuple[int, int, float, bool]]
    ratio_ok: bool
    sine_ok: bool
    alpha_limit: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return self.ratio_ok and self.sine_ok


def check_sufficient_conditions(steps, alpha: float, Np: int | None = None) -> ConditionCheck:
    """Evaluate, as stated:

    * steps_m / steps_{Np+1-m} >= (Np - m) / (m - 1) for m > floor(Np / 2)
    * sin(alpha n) > 0 for n = 1 .. Np - 1

    A zero denominator makes its ratio requirement fail, with a diagnostic.
    The sine test is strict: values within ``SINE_TOL`` of zero count as
    zero, so alpha = pi / (Np - 1) fails as it should. ``alpha_limit`` is
    pi / (Np - 1), the supremum of admissible alpha on (0, pi).
    """
    steps = np.asarray(steps, dtype=float)
    Np = steps.size if Np is None else Np
    if Np < 2 or steps.size != Np:
        raise ValueError("need Np >= 2 steps")
    if np.any(steps < 0):
        raise ValueError("steps must be >= 0")
    reqs = []
    notes = []
    for m in range(Np // 2 + 1, Np + 1):
        mp = Np + 1 - m
        bound = (Np - m) / (m - 1)
        num, den = steps[m - 1], steps[mp - 1]
        if m == mp:
            holds = True  # self-ratio is 1 and the bound is 1
        elif den == 0:
            holds = False
            notes.append(f"step {mp} is zero: ratio for m={m} undefined")
        else:
            holds = bool(num / den >= bound)
        reqs.append((m, mp, bound, holds))
    n = np.arange(1, Np)
    sine_ok = bool(np.all(np.sin(alpha * n) > SINE_TOL))
    return ConditionCheck(reqs, all(r[3] for r in reqs), sine_ok, math.pi / (Np - 1), notes)


def column_correlation(theta_l: SensingMatrix | np.ndarray, k: int, k_prime: int) -> float:
    """|<g_k, g_k'>| from the actual columns."""
    A = theta_l.entries if isinstance(theta_l, SensingMatrix) else np.asarray(theta_l)
    return float(abs(np.vdot(A[:, k], A[:, k_prime])))


@dataclass
class ResolutionReport:
    alpha: float
    h_stepped: float
    h_constant: float
    conditions: ConditionCheck
    correlation_ratios: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "h_stepped": self.h_stepped,
            "h_constant": self.h_constant,
            "ratio_requirements": [
                {"m": m, "m_prime": mp, "bound": b, "holds": ok} for m, mp, b, ok in self.conditions.ratio_requirements
            ],
            "ratio_condition": self.conditions.ratio_ok,
            "sine_condition": self.conditions.sine_ok,
            "alpha_limit": self.conditions.alpha_limit,
            "verdict": self.conditions.verdict,
            "diagnostics": self.conditions.diagnostics,
            "correlation_ratios": self.correlation_ratios,
        }


def resolution_report(steps, alpha: float, correlation_ratios=()) -> ResolutionReport:
    steps = np.asarray(steps, dtype=float)
    return ResolutionReport(
        alpha,
        h_metric(steps, alpha),
        h_metric(np.zeros_like(steps), alpha),
        check_sufficient_conditions(steps, alpha),
        list(correlation_ratios),
    )


@dataclass
class ConditionSweep:
    draws: int
    verdict_true: int
    verdict_true_and_lower: int
    failures: list[dict] = field(default_factory=list)

    @property
    def fraction_lower(self) -> float:
        return self.verdict_true_and_lower / self.verdict_true if self.verdict_true else float("nan")

    def as_dict(self) -> dict:
        return {"draws": self.draws, "verdict_true": self.verdict_true,
                "verdict_true_and_h_lower": self.verdict_true_and_lower, "fraction": self.fraction_lower,
                "counterexamples": self.failures[:10]}


def sweep_conditions(rng: np.random.Generator, draws: int, pulse_counts=range(3, 11), max_step: float = 1e-2,
                     alpha_span: float = 1.25) -> ConditionSweep:
    """Random (steps, alpha) draws; counts how often a true verdict comes with h(steps) < h(0).

    Steps are uniform on [0, max_step], sorted ascending on half the draws so
    the ratio condition is met often; alpha is uniform on
    (0, alpha_span * pi / (Np - 1)) so some draws break the sine condition.
    """
    pulse_counts = list(pulse_counts)
    true = lower = 0
    failures = []
    for _ in range(draws):
        Np = int(rng.choice(pulse_counts))
        steps = rng.uniform(0.0, max_step, Np)
        if rng.random() < 0.5:
            steps = np.sort(steps)
        alpha = float(rng.uniform(0.0, alpha_span * math.pi / (Np - 1)))
        if alpha == 0.0 or not check_sufficient_conditions(steps, alpha).verdict:
            continue
        true += 1
        hs, h0 = h_metric(steps, alpha), h_metric(np.zeros(Np), alpha)
        if hs < h0:
            lower += 1
        else:
            failures.append({"steps": steps.tolist(), "alpha": alpha, "h_stepped": hs, "h_constant": h0})
    return ConditionSweep(draws, true, lower, failures)
