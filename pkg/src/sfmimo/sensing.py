"""Parameter grids and the stacked sensing matrix over (angle, velocity, range).

Rows are ordered receiver-major: block (l, m) for every receiver l and, within
it, every requested pulse m in the given order. Columns follow the grid's
point order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .scene import SPEED_OF_LIGHT, Scenario, eta_all
from .synth import MeasurementMatrix, doppler_diagonal
from .waveform import PulseSchedule, WaveformMatrix

DIMS = ("angle", "velocity", "range")
DEFAULT_MAX_ENTRIES = 20_000_000


class GridError(ValueError):
    pass


class MemoryBudgetError(RuntimeError):
    pass


def _check_axis(name, values) -> np.ndarray:
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.ndim != 1 or values.size == 0:
        raise GridError(f"{name} axis must be a non-empty 1-D sequence")
    if values.size > 1 and np.any(np.diff(values) <= 0):
        raise GridError(f"{name} axis must be strictly increasing")
    return values


def axis_from_spec(start: float, step: float, count: int) -> np.ndarray:
    if count < 1:
        raise GridError("axis count must be >= 1")
    return start + step * np.arange(count)


@dataclass(frozen=True)
class ParamGrid:
    """Ordered list of (angle rad, velocity m/s, range m) points.

    A full grid is the Cartesian product of three axes (angle-major). The
    restricted grids used by the decoupled estimator cross one active axis
    with a list of anchor tuples; :meth:`along` builds those.
    """

    points: np.ndarray
    angle_axis: np.ndarray
    velocity_axis: np.ndarray
    range_axis: np.ndarray
    active_dims: tuple[str, ...] = DIMS
    _lookup: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise GridError("grid is empty")
        object.__setattr__(self, "points", pts)
        lookup = {}
        for n, p in enumerate(pts):
            key = _key(p)
            if key in lookup:
                raise GridError(f"duplicate grid point {tuple(p)}")
            lookup[key] = n
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def full(cls, angles, velocities, ranges) -> "ParamGrid":
        a = _check_axis("angle", angles)
        b = _check_axis("velocity", velocities)
        c = _check_axis("range", ranges)
        A, B, C = np.meshgrid(a, b, c, indexing="ij")
        pts = np.stack([A.ravel(), B.ravel(), C.ravel()], axis=1)
        return cls(pts, a, b, c, DIMS)

    @classmethod
    def along(cls, dim: str, values, anchors) -> "ParamGrid":
        """Cross ``anchors`` (iterable of (a, b, c)) with ``values`` on axis ``dim``.

        Anchor-major order: all values for the first anchor, then the next.
        The anchor's own entry for ``dim`` is overwritten.
        """
        if dim not in DIMS:
            raise GridError(f"unknown dimension {dim!r}")
        values = _check_axis(dim, values)
        anchors = np.asarray(list(anchors), dtype=float).reshape(-1, 3)
        if anchors.shape[0] == 0:
            raise GridError("no anchors to cross with")
        k = DIMS.index(dim)
        pts = np.repeat(anchors, values.size, axis=0)
        pts[:, k] = np.tile(values, anchors.shape[0])
        axes = [np.unique(pts[:, i]) for i in range(3)]
        axes[k] = values
        return cls(pts, axes[0], axes[1], axes[2], (dim,))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.size

    def point(self, index: int) -> tuple[float, float, float]:
        if not 0 <= index < self.size:
            raise IndexError(f"grid index {index} out of range [0, {self.size})")
        return tuple(float(x) for x in self.points[index])

    def index(self, point) -> int:
        try:
            return self._lookup[_key(point)]
        except KeyError:
            raise GridError(f"point {tuple(point)} is not on the grid") from None

    def contains(self, point) -> bool:
        return _key(point) in self._lookup


def _key(point) -> tuple:
    # 1e-9 relative-ish resolution; grid values are O(1e-2 rad), O(1e2 m/s), O(1e3 m)
    return tuple(round(float(x), 9) for x in point)


def flat_index(grid: ParamGrid, point) -> int:
    return grid.index(point)


def grid_point(grid: ParamGrid, index: int) -> tuple[float, float, float]:
    return grid.point(index)


def range_doppler_phase_cycles(points: np.ndarray, rx_nodes, l: int, carrier: float, m: int, T: float) -> np.ndarray:
    """q_{lmn} for every grid point (cycles)."""
    eta_r = eta_all([rx_nodes[l]], points[:, 0])[0]
    return (-2.0 * points[:, 2] * carrier + eta_r * carrier + 2.0 * points[:, 1] * carrier * m * T) / SPEED_OF_LIGHT


def _pulse_block(points, tx_nodes, X: WaveformMatrix, carrier: float) -> np.ndarray:
    """X^H D(2 b f_m / c) X v_m(a) for every grid point: Mt x N."""
    Xe = X.entries
    V = np.exp(2j * np.pi * carrier / SPEED_OF_LIGHT * eta_all(tx_nodes, points[:, 0]))
    dop = 2.0 * points[:, 1] * carrier / SPEED_OF_LIGHT
    D = doppler_diagonal(dop, X.samples_per_pulse, X.symbol_interval).T
    return Xe.conj().T @ (D * (Xe @ V))


def basis_column(point, l: int, m: int, scenario: Scenario, schedule: PulseSchedule, X: WaveformMatrix,
                 phi_l: MeasurementMatrix) -> np.ndarray:
    """Response of a unit scatterer at ``point`` in block (l, m): length M."""
    if phi_l.entries.shape[1] != X.n_tx or X.n_tx != scenario.n_tx:
        raise ValueError("measurement matrix, waveform and transmit nodes disagree on Mt")
    pts = np.asarray(point, dtype=float).reshape(1, 3)
    fm = schedule.carrier_of(m)
    q = range_doppler_phase_cycles(pts, scenario.rx_nodes, l, fm, m, schedule.repetition_interval)
    return np.exp(2j * np.pi * q[0]) * (phi_l.entries @ _pulse_block(pts, scenario.tx_nodes, X, fm)[:, 0])


@dataclass(frozen=True)
class SensingMatrix:
    entries: np.ndarray
    grid: ParamGrid
    pulses: tuple[int, ...]
    n_rx: int
    compression: int

    @property
    def shape(self):
        return self.entries.shape

    def block(self, l: int, k: int) -> np.ndarray:
        """Rows of block (receiver l, k-th requested pulse)."""
        M = self.compression
        start = (l * len(self.pulses) + k) * M
        return self.entries[start:start + M]

    def gram(self) -> np.ndarray:
        A = self.entries
        return A.conj().T @ A


def _validate(grid, scenario, schedule, X, phis, pulses):
    if not pulses:
        raise ValueError("pulse subset is empty")
    if any(not 0 <= m < schedule.pulse_count for m in pulses):
        raise IndexError("pulse subset outside the schedule")
    if len(phis) != scenario.n_rx:
        raise ValueError(f"expected {scenario.n_rx} measurement matrices, got {len(phis)}")
    if X.n_tx != scenario.n_tx:
        raise ValueError("waveform columns do not match transmit node count")
    Ms = {p.entries.shape for p in phis}
    if len(Ms) != 1 or next(iter(Ms))[1] != X.n_tx:
        raise ValueError("measurement matrices must all be M x Mt")
    return next(iter(Ms))[0]


def build_sensing_matrix(grid: ParamGrid, scenario: Scenario, schedule: PulseSchedule, X: WaveformMatrix,
                         phis, pulses=None, max_entries: int = DEFAULT_MAX_ENTRIES) -> SensingMatrix:
    pulses = tuple(range(schedule.pulse_count) if pulses is None else pulses)
    M = _validate(grid, scenario, schedule, X, phis, pulses)
    rows = scenario.n_rx * len(pulses) * M
    if rows * grid.size > max_entries:
        raise MemoryBudgetError(
            f"sensing matrix would hold {rows} x {grid.size} = {rows * grid.size:.3g} entries "
            f"(budget {max_entries:.3g}); shrink the grid, use the decoupled estimator, "
            f"or apply the matrix-free operator"
        )
    pts = grid.points
    T = schedule.repetition_interval
    blocks = {m: _pulse_block(pts, scenario.tx_nodes, X, schedule.carrier_of(m)) for m in set(pulses)}
    out = np.empty((rows, grid.size), dtype=complex)
    r = 0
    for l in range(scenario.n_rx):
        phi = phis[l].entries
        for m in pulses:
            fm = schedule.carrier_of(m)
            q = range_doppler_phase_cycles(pts, scenario.rx_nodes, l, fm, m, T)
            out[r:r + M] = (phi @ blocks[m]) * np.exp(2j * np.pi * q)[None, :]
            r += M
    return SensingMatrix(out, grid, pulses, scenario.n_rx, M)


def sensing_operator(grid: ParamGrid, scenario: Scenario, schedule: PulseSchedule, X: WaveformMatrix,
                     phis, pulses=None) -> LinearOperator:
    """Matrix-free Theta: applies Theta and Theta^H block by block.

    Stores only the Mt x N per-pulse blocks and the per-block phase rows.
    """
    pulses = tuple(range(schedule.pulse_count) if pulses is None else pulses)
    M = _validate(grid, scenario, schedule, X, phis, pulses)
    pts = grid.points
    T = schedule.repetition_interval
    blocks = {m: _pulse_block(pts, scenario.tx_nodes, X, schedule.carrier_of(m)) for m in set(pulses)}
    phases = [
        [np.exp(2j * np.pi * range_doppler_phase_cycles(pts, scenario.rx_nodes, l, schedule.carrier_of(m), m, T))
         for m in pulses]
        for l in range(scenario.n_rx)
    ]
    rows = scenario.n_rx * len(pulses) * M
    N = grid.size

    def matvec(s):
        s = np.asarray(s).reshape(-1)
        out = np.empty(rows, dtype=complex)
        r = 0
        for l in range(scenario.n_rx):
            for k, m in enumerate(pulses):
                out[r:r + M] = phis[l].entries @ (blocks[m] @ (phases[l][k] * s))
                r += M
        return out

    def rmatvec(y):
        y = np.asarray(y).reshape(-1)
        acc = np.zeros(N, dtype=complex)
        r = 0
        for l in range(scenario.n_rx):
            for k, m in enumerate(pulses):
                acc += phases[l][k].conj() * (blocks[m].conj().T @ (phis[l].entries.conj().T @ y[r:r + M]))
                r += M
        return acc

    return LinearOperator((rows, N), matvec=matvec, rmatvec=rmatvec, dtype=complex)


def column_norms(theta: SensingMatrix) -> np.ndarray:
    return np.linalg.norm(theta.entries, axis=0)


def sparse_truth(grid: ParamGrid, scenario: Scenario, absorb_range: bool = False) -> np.ndarray:
    """Scene vector s with each target's coefficient at its grid cell.

    With ``absorb_range`` (range anchored out of the grid, constant carrier)
    the coefficient carries the range phase at the base carrier.
    """
    s = np.zeros(grid.size, dtype=complex)
    for t in scenario.targets:
        if absorb_range:
            n = grid.index((t.azimuth, t.speed, grid.points[0, 2]))
            s[n] += t.reflection * np.exp(
                -2j * math.pi * 2.0 * (t.initial_range - grid.points[0, 2]) * scenario.carrier / SPEED_OF_LIGHT
            )
        else:
            s[grid.index((t.azimuth, t.speed, t.initial_range))] += t.reflection
    return s


def correlation_noise_std(theta: SensingMatrix, phis, power: float) -> np.ndarray:
    """Per-column std of Theta^H n for fast-time white noise of per-sample power ``power``.

    Block (l, m) noise is Phi_l X^H e with X orthonormal, so column n sees
    variance power * sum over blocks of ||Phi_l^H theta_{lm, n}||^2.
    """
    acc = np.zeros(theta.grid.size)
    for l in range(theta.n_rx):
        ph = phis[l].entries.conj().T
        for k in range(len(theta.pulses)):
            acc += np.sum(np.abs(ph @ theta.block(l, k)) ** 2, axis=0)
    return np.sqrt(power * acc)
