import numpy as np
import pytest

from sfmimo.estimator import RadarSystem
from sfmimo.scene import Scenario, Target, place_nodes_uniform_disk
from sfmimo.synth import gaussian_measurement_matrix
from sfmimo.waveform import gen_orthogonal_qpsk, make_schedule


def small_system(seed=0, *, n_tx=6, n_rx=3, M=4, L=16, Np=4, mode="random", targets=(), jammers=(),
                 noise_power=0.0, leading_constant=0, Ts=1e-7, T=2.5e-4, f=5e9, disk_radius=1.0,
                 step_min=0.001, step_max=0.01):
    """A few-node system cheap enough for exhaustive checks."""
    rng = np.random.default_rng(seed)
    tx = place_nodes_uniform_disk(n_tx, disk_radius, rng)
    rx = place_nodes_uniform_disk(n_rx, disk_radius, rng)
    X = gen_orthogonal_qpsk(L, n_tx, rng, Ts)
    phis = tuple(gaussian_measurement_matrix(M, n_tx, rng, l) for l in range(n_rx))
    sched = make_schedule(mode, Np, T, f, rng, step=0.01, step_min=step_min, step_max=step_max,
                          leading_constant=leading_constant)
    sc = Scenario(tx, rx, targets, jammers, noise_power, f, seed)
    return RadarSystem(sc, sched, X, phis)


@pytest.fixture
def make_system():
    return small_system


@pytest.fixture
def deg():
    return np.pi / 180


@pytest.fixture
def one_target():
    return [Target(0.0, 20.0, 1000.0)]


def pytest_terminal_summary(terminalreporter):
    lines = []
    try:
        import test_acceptance
        lines = test_acceptance.RESULTS
    except ImportError:
        pass
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
