"""Sparse scene recovery: Dantzig selector (SOCP) and an ISTA surrogate."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.sparse.linalg import LinearOperator, svds

from .sensing import ParamGrid, SensingMatrix

DEFAULT_THRESHOLD = 0.5
FEASIBILITY_RTOL = 1e-6
SOLVER_OPTIONS = {"CLARABEL": {"tol_feas": 1e-10, "tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10}}


class RecoveryError(RuntimeError):
    """The convex solver failed to return a usable point."""


@dataclass
class RecoveryResult:
    s_hat: np.ndarray
    support: list[tuple[int, float]]
    residual_norm: float
    lam: float
    diagnostics: dict = field(default_factory=dict)


def _as_matrix(theta) -> np.ndarray:
    if isinstance(theta, SensingMatrix):
        return theta.entries
    return np.asarray(theta)


def threshold_support(s_hat: np.ndarray, threshold: float = DEFAULT_THRESHOLD, top_k: int | None = None):
    """Indices kept by the relative-threshold (or top-K) detector, strongest first."""
    mags = np.abs(s_hat)
    peak = mags.max() if mags.size else 0.0
    if peak == 0.0:
        return []
    if top_k is not None:
        order = np.argsort(-mags, kind="stable")[:top_k]
        order = [n for n in order if mags[n] > 0]
    else:
        keep = np.flatnonzero(mags >= threshold * peak)
        order = keep[np.argsort(-mags[keep], kind="stable")]
    return [(int(n), float(mags[n])) for n in order]


def default_lambda(theta, noise_std, kappa: float = 1.0) -> float:
    """kappa * sigma_c * sqrt(2 log N).

    ``noise_std`` is either a scalar per-row std of white noise (sigma_c is then
    the largest column norm times it) or the per-column std of Theta^H noise,
    whose largest entry is sigma_c.
    """
    A = _as_matrix(theta)
    N = A.shape[1]
    noise_std = np.asarray(noise_std, dtype=float)
    if noise_std.ndim == 0:
        sigma_c = float(np.max(np.linalg.norm(A, axis=0))) * float(noise_std)
    else:
        sigma_c = float(np.max(noise_std))
    return kappa * sigma_c * math.sqrt(2.0 * math.log(max(N, 2)))


def _result(A, r, s, lam, threshold, top_k, diagnostics) -> RecoveryResult:
    corr = A.conj().T @ (r - A @ s)
    diagnostics = dict(diagnostics)
    diagnostics["max_correlation"] = float(np.max(np.abs(corr))) if corr.size else 0.0
    return RecoveryResult(
        s_hat=s,
        support=threshold_support(s, threshold, top_k),
        residual_norm=float(np.linalg.norm(r - A @ s)),
        lam=float(lam),
        diagnostics=diagnostics,
    )


def dantzig_selector(theta, r, lam: float, *, threshold: float = DEFAULT_THRESHOLD, top_k: int | None = None,
                     solver: str = "CLARABEL", max_attempts: int = 4) -> RecoveryResult:
    """min ||s||_1  s.t.  |Theta^H (r - Theta s)|_n <= lam for every n.

    The complex problem is lifted to 2N real unknowns; both the objective and
    the constraint use the exact complex modulus (second-order cones). Data
    are rescaled so the largest correlation and the largest Gram diagonal are
    one before solving.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    A = _as_matrix(theta)
    r = np.asarray(r, dtype=complex).reshape(-1)
    if A.shape[0] != r.size:
        raise ValueError(f"Theta has {A.shape[0]} rows but r has {r.size} entries")
    N = A.shape[1]
    z = A.conj().T @ r
    zmax = float(np.max(np.abs(z))) if N else 0.0
    if zmax <= lam or zmax == 0.0:
        return _result(A, r, np.zeros(N, dtype=complex), lam, threshold, top_k,
                       {"solver": "dantzig", "status": "zero_feasible", "iterations": 0, "converged": True})

    G = A.conj().T @ A
    gscale = float(np.max(np.abs(np.diag(G)).real))
    Gs = G / gscale
    zs = z / zmax
    target = lam / zmax

    x = cp.Variable(2 * N)
    bound = cp.Parameter(nonneg=True)
    u, w = x[:N], x[N:]
    Gr, Gi = Gs.real, Gs.imag
    re = zs.real - (Gr @ u - Gi @ w)
    im = zs.imag - (Gi @ u + Gr @ w)
    objective = cp.Minimize(cp.sum(cp.norm(cp.vstack([u, w]), 2, axis=0)))
    problem = cp.Problem(objective, [cp.norm(cp.vstack([re, im]), 2, axis=0) <= bound])

    # the interior-point iterate may overshoot the cone by ~solver tolerance;
    # re-solve against a tightened bound until the exact constraint holds
    bound.value = target
    iterations = 0
    for attempt in range(1, max_attempts + 1):
        try:
            problem.solve(solver=solver, **SOLVER_OPTIONS.get(solver, {}))
        except cp.error.SolverError as exc:
            raise RecoveryError(f"Dantzig selector solve failed: {exc}") from exc
        if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or x.value is None:
            raise RecoveryError(f"Dantzig selector did not converge (status {problem.status})")
        stats = problem.solver_stats
        iterations += int(stats.num_iters) if stats and stats.num_iters is not None else 0
        s = (x.value[:N] + 1j * x.value[N:]) * (zmax / gscale)
        worst = float(np.max(np.abs(z - G @ s)))
        if worst <= lam * (1.0 + FEASIBILITY_RTOL):
            break
        bound.value = max(bound.value - 2.0 * (worst - lam) / zmax, 0.0)
    feasible = worst <= lam * (1.0 + FEASIBILITY_RTOL)
    if not feasible:
        warnings.warn(f"Dantzig selector feasibility {worst / lam - 1:.2e} above tolerance after "
                      f"{max_attempts} attempts", RuntimeWarning, stacklevel=2)
    diagnostics = {
        "solver": "dantzig",
        "status": problem.status,
        "iterations": iterations,
        "attempts": attempt,
        "converged": problem.status == cp.OPTIMAL and feasible,
        "feasible": feasible,
    }
    return _result(A, r, s, lam, threshold, top_k, diagnostics)


def _complex_soft(x, tau):
    mag = np.abs(x)
    scale = np.where(mag > tau, 1.0 - tau / np.where(mag > 0, mag, 1.0), 0.0)
    return x * scale


def _operator_norm_sq(A) -> float:
    if isinstance(A, LinearOperator):
        if min(A.shape) <= 2:
            dense = A @ np.eye(A.shape[1])
            return float(np.linalg.norm(dense, 2) ** 2)
        return float(svds(A, k=1, return_singular_vectors=False)[0] ** 2)
    return float(np.linalg.norm(A, 2) ** 2)


def l1_first_order(theta, r, lam: float, *, threshold: float = DEFAULT_THRESHOLD, top_k: int | None = None,
                   max_iter: int = 20000, tol: float = 1e-8) -> RecoveryResult:
    """ISTA on 0.5 ||r - Theta s||^2 + lam ||s||_1.

    This is the basis-pursuit-denoising surrogate, not the Dantzig selector;
    its ``lam`` is not interchangeable with the Dantzig bound. Accepts a dense
    matrix, a :class:`SensingMatrix` or a matrix-free ``LinearOperator``.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    A = theta if isinstance(theta, LinearOperator) else _as_matrix(theta)
    r = np.asarray(r, dtype=complex).reshape(-1)
    N = A.shape[1]
    step = 1.0 / _operator_norm_sq(A)
    s = np.zeros(N, dtype=complex)
    objective = [0.5 * float(np.vdot(r, r).real)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = A.rmatvec(r - A.matvec(s)) if isinstance(A, LinearOperator) else A.conj().T @ (r - A @ s)
        s_new = _complex_soft(s + step * grad, step * lam)
        res = r - (A.matvec(s_new) if isinstance(A, LinearOperator) else A @ s_new)
        objective.append(0.5 * float(np.vdot(res, res).real) + lam * float(np.sum(np.abs(s_new))))
        delta = np.linalg.norm(s_new - s)
        s = s_new
        if delta <= tol * max(np.linalg.norm(s), 1e-300):
            converged = True
            break
    if not converged:
        warnings.warn(f"ISTA stopped after {max_iter} iterations without meeting tol={tol}", RuntimeWarning,
                      stacklevel=2)
    diagnostics = {"solver": "ista", "status": "converged" if converged else "max_iter", "iterations": it,
                   "converged": converged, "objective": objective}
    if isinstance(A, LinearOperator):
        res = r - A.matvec(s)
        corr = A.rmatvec(res)
        return RecoveryResult(s, threshold_support(s, threshold, top_k), float(np.linalg.norm(res)), lam,
                              {**diagnostics, "max_correlation": float(np.max(np.abs(corr)))})
    return _result(A, r, s, lam, threshold, top_k, diagnostics)


def extract_support(s_hat, grid: ParamGrid | None = None, *, threshold: float = DEFAULT_THRESHOLD,
                    top_k: int | None = None):
    """Detected cells as (grid point, complex amplitude); (index, amplitude) without a grid."""
    s_hat = np.asarray(s_hat)
    picked = threshold_support(s_hat, threshold, top_k)
    if grid is None:
        return [(n, complex(s_hat[n])) for n, _ in picked]
    return [(grid.point(n), complex(s_hat[n])) for n, _ in picked]
