import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfmimo.scene import Target
from sfmimo.sensing import (GridError, MemoryBudgetError, ParamGrid, basis_column, build_sensing_matrix,
                            correlation_noise_std, sensing_operator, sparse_truth)
from sfmimo.synth import fuse, synthesize, thermal_noise

DEG = np.pi / 180


def _grid():
    return ParamGrid.full(np.array([-1.0, 0.0, 1.0]) * DEG, [10.0, 20.0], [1000.0, 1050.0])


def test_full_grid_order_and_lookup():
    g = _grid()
    assert g.size == 12
    assert g.point(0) == (-DEG, 10.0, 1000.0)
    assert g.point(1)[2] == 1050.0  # range varies fastest
    for n in range(g.size):
        assert g.index(g.point(n)) == n
    with pytest.raises(GridError):
        g.index((0.5, 0.0, 0.0))
    with pytest.raises(IndexError):
        g.point(12)


def test_along_grid_crosses_anchors():
    g = ParamGrid.along("velocity", [1.0, 2.0, 3.0], [(0.1, 0.0, 0.0), (0.2, 0.0, 0.0)])
    assert g.size == 6 and g.active_dims == ("velocity",)
    assert g.point(3) == (0.2, 1.0, 0.0)
    with pytest.raises(GridError):
        ParamGrid.along("colour", [1.0], [(0, 0, 0)])
    with pytest.raises(GridError):
        ParamGrid.full([], [1.0], [1.0])


def test_columns_match_basis_column(make_system):
    s = make_system(3)
    g = _grid()
    theta = build_sensing_matrix(g, s.scenario, s.schedule, s.waveform, s.phis)
    M, Np = 4, s.schedule.pulse_count
    for n in (0, 5, 11):
        col = np.concatenate([basis_column(g.point(n), l, m, s.scenario, s.schedule, s.waveform, s.phis[l])
                              for l in range(s.scenario.n_rx) for m in range(Np)])
        np.testing.assert_allclose(theta.entries[:, n], col, rtol=1e-12)
    assert theta.shape == (s.scenario.n_rx * Np * M, g.size)
    np.testing.assert_array_equal(theta.block(1, 2), theta.entries[(Np + 2) * M:(Np + 3) * M])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_synthesis_equals_theta_s(seed):
    g = _grid()
    rng = np.random.default_rng(seed)
    picks = rng.choice(g.size, size=2, replace=False)
    targets = [Target(*g.point(n), complex(rng.normal(), rng.normal())) for n in picks]
    from conftest import small_system
    s = small_system(seed, targets=targets)
    theta = build_sensing_matrix(g, s.scenario, s.schedule, s.waveform, s.phis)
    r = fuse(synthesize(s.scenario, s.schedule, s.waveform, s.phis, noiseless=True))
    model = theta.entries @ sparse_truth(g, s.scenario)
    assert np.max(np.abs(r - model)) <= 1e-9 * np.max(np.abs(r))


def test_matrix_free_operator_agrees(make_system):
    s = make_system(5)
    g = _grid()
    theta = build_sensing_matrix(g, s.scenario, s.schedule, s.waveform, s.phis, pulses=[0, 2])
    op = sensing_operator(g, s.scenario, s.schedule, s.waveform, s.phis, pulses=[0, 2])
    rng = np.random.default_rng(0)
    x = rng.normal(size=g.size) + 1j * rng.normal(size=g.size)
    y = rng.normal(size=theta.shape[0]) + 1j * rng.normal(size=theta.shape[0])
    np.testing.assert_allclose(op.matvec(x), theta.entries @ x, rtol=1e-10)
    np.testing.assert_allclose(op.rmatvec(y), theta.entries.conj().T @ y, rtol=1e-10)


def test_memory_guard(make_system):
    s = make_system(0)
    with pytest.raises(MemoryBudgetError, match="decoupled"):
        build_sensing_matrix(_grid(), s.scenario, s.schedule, s.waveform, s.phis, max_entries=10)


def test_mismatched_inputs(make_system):
    s = make_system(0)
    with pytest.raises(ValueError):
        build_sensing_matrix(_grid(), s.scenario, s.schedule, s.waveform, s.phis[:1])
    with pytest.raises(IndexError):
        build_sensing_matrix(_grid(), s.scenario, s.schedule, s.waveform, s.phis, pulses=[7])


def test_correlation_noise_std_matches_monte_carlo(make_system):
    s = make_system(2, M=3, L=8)
    g = _grid()
    theta = build_sensing_matrix(g, s.scenario, s.schedule, s.waveform, s.phis)
    X = s.waveform.entries
    draws = []
    for trial in range(3000):
        n = np.concatenate([s.phis[l].entries @ (X.conj().T @ thermal_noise(trial, l, m, 8, 0.5))
                            for l in range(s.scenario.n_rx) for m in range(s.schedule.pulse_count)])
        draws.append(theta.entries.conj().T @ n)
    empirical = np.std(np.array(draws), axis=0)
    np.testing.assert_allclose(correlation_noise_std(theta, s.phis, 0.5), empirical, rtol=0.06)
