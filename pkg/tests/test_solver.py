import math

import numpy as np
import pytest
from scipy.sparse.linalg import aslinearoperator

from oracles import best_subset_support
from sfmimo.solver import (FEASIBILITY_RTOL, default_lambda, dantzig_selector, extract_support, l1_first_order,
                           threshold_support)


def gaussian_instance(seed, rows=32, N=48, K=2):
    rng = np.random.default_rng(seed)
    A = (rng.normal(size=(rows, N)) + 1j * rng.normal(size=(rows, N))) / math.sqrt(2 * rows)
    s = np.zeros(N, dtype=complex)
    support = rng.choice(N, size=K, replace=False)
    s[support] = rng.uniform(0.6, 1.0, K) * np.exp(2j * np.pi * rng.uniform(size=K))
    return A, s, A @ s


@pytest.mark.parametrize("seed", range(8))
def test_dantzig_matches_best_subset(seed):
    A, s, r = gaussian_instance(seed, N=24 + 5 * seed, K=1 + seed % 2)
    lam = 1e-6 * np.max(np.abs(A.conj().T @ r))
    res = dantzig_selector(A, r, lam)
    assert {n for n, _ in res.support} == set(best_subset_support(A, r, 2))
    assert res.diagnostics["max_correlation"] <= lam * (1 + FEASIBILITY_RTOL)
    np.testing.assert_allclose(res.s_hat, s, atol=1e-4)


def test_dantzig_zero_solution_when_lambda_dominates():
    A, _, r = gaussian_instance(0)
    lam = 2 * np.max(np.abs(A.conj().T @ r))
    res = dantzig_selector(A, r, lam)
    assert res.support == [] and not np.any(res.s_hat)
    assert res.diagnostics["status"] == "zero_feasible"


def test_dantzig_feasible_under_noise():
    A, _, r = gaussian_instance(3)
    rng = np.random.default_rng(1)
    r = r + 0.05 * (rng.normal(size=r.size) + 1j * rng.normal(size=r.size))
    lam = default_lambda(A, 0.05)
    res = dantzig_selector(A, r, lam)
    assert res.diagnostics["feasible"]
    assert res.diagnostics["max_correlation"] <= lam * (1 + FEASIBILITY_RTOL)


def test_dantzig_input_validation():
    A, _, r = gaussian_instance(0)
    with pytest.raises(ValueError):
        dantzig_selector(A, r, -1.0)
    with pytest.raises(ValueError):
        dantzig_selector(A, r[:-1], 0.1)


def test_ista_recovers_support_and_decreases_objective():
    A, s, r = gaussian_instance(2)
    res = l1_first_order(A, r, 1e-3)
    assert {n for n, _ in res.support} == set(np.flatnonzero(s))
    obj = np.array(res.diagnostics["objective"])
    assert np.all(np.diff(obj) <= 1e-12 * obj[0])


def test_ista_operator_input_agrees_with_dense():
    A, _, r = gaussian_instance(4)
    dense = l1_first_order(A, r, 1e-2)
    op = l1_first_order(aslinearoperator(A), r, 1e-2)
    np.testing.assert_allclose(op.s_hat, dense.s_hat, atol=1e-6)


def test_threshold_support_rules():
    s = np.array([0.1, -1.0, 0.5j, 0.49])
    assert [n for n, _ in threshold_support(s)] == [1, 2]
    assert [n for n, _ in threshold_support(s, top_k=3)] == [1, 2, 3]
    assert threshold_support(np.zeros(3)) == []


def test_default_lambda_formula():
    A = np.eye(4) * 2.0
    assert default_lambda(A, 0.5) == pytest.approx(2.0 * 0.5 * math.sqrt(2 * math.log(4)))
    assert default_lambda(A, np.array([0.1, 0.3, 0.2, 0.0]), kappa=2) == pytest.approx(
        2 * 0.3 * math.sqrt(2 * math.log(4)))


def test_extract_support_with_grid():
    from sfmimo.sensing import ParamGrid
    g = ParamGrid.full([0.0], [1.0, 2.0], [10.0])
    out = extract_support(np.array([0, 2 + 0j]), g)
    assert out == [((0.0, 2.0, 10.0), 2 + 0j)]
