"""Comparison solvers: OMP, GraDes and an MCP path by iterative thresholding."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .adaptive import default_L, hbic_score
from .errors import RankDeficientActiveSet
from .model import FitResult, PathEntry, RegressionData, SolutionPath, Status, support
from .solver import top_T_indices

__all__ = [
    "omp_fit",
    "top_K_threshold",
    "grades_fit",
    "McpConfig",
    "mcp_threshold",
    "mcp_fit",
    "mcp_path_fit",
]


def omp_fit(data: RegressionData, K: int) -> FitResult:
    """Orthogonal matching pursuit: add the column most correlated with the
    residual, refit least squares, repeat ``K`` times."""
    if not 1 <= K <= min(data.n - 1, data.p):
        raise ValueError(f"K must lie in [1, min(n-1, p)], got {K}")
    t0 = time.perf_counter()
    X, y, n = data.X, data.y, data.n
    active: list[int] = []
    chosen = np.zeros(data.p, dtype=bool)
    coef = np.zeros(0)
    r = y.copy()
    stop_at = 1e-12 * max(float(np.linalg.norm(y)), 1.0)
    status = Status.CONVERGED
    while len(active) < K:
        if np.linalg.norm(r) <= stop_at:
            status = Status.EARLY_STOP
            break
        c = np.abs(X.T @ r) / n
        c[chosen] = -np.inf
        j = int(np.argmax(c))
        active.append(j)
        chosen[j] = True
        X_A = X[:, active]
        coef, _, rank, _ = np.linalg.lstsq(X_A, y, rcond=None)
        if rank < len(active):
            raise RankDeficientActiveSet(active, "OMP refit")
        r = y - X_A @ coef
    beta = np.zeros(data.p)
    beta[active] = coef
    order = np.argsort(active)
    return FitResult(beta, np.array(active, dtype=int)[order], len(active), status,
                     float(np.linalg.norm(r)), time.perf_counter() - t0)


def top_K_threshold(v, K):
    """Keep the ``K`` largest-magnitude entries of ``v`` and zero the rest."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    idx = top_T_indices(v, K)
    out[idx] = v[idx]
    return out


def grades_fit(data: RegressionData, K: int, step: float = 1.0 / 3.0,
               epsilon: float = 0.0, max_iters: int | None = None) -> FitResult:
    """Gradient descent with hard thresholding to the ``K`` largest entries.

    Iterates ``beta <- H_K(beta + step * X'(y - X beta)/n)`` from zero and stops
    when the residual norm is at most ``epsilon`` (EarlyStop), when an update
    leaves the iterate unchanged (Converged), or after ``max_iters`` updates
    (default ``n/2``).
    """
    if step < 0:
        raise ValueError("step must be nonnegative")
    if max_iters is None:
        max_iters = data.n // 2
    t0 = time.perf_counter()
    X, n = data.X, data.n
    beta = np.zeros(data.p)
    r = data.y.copy()
    status = Status.MAX_ITERS
    it = 0
    while True:
        if np.linalg.norm(r) <= epsilon:
            status = Status.EARLY_STOP
            break
        if it >= max_iters:
            break
        new = top_K_threshold(beta + step * (X.T @ r) / n, K)
        it += 1
        # with a zero step every point is fixed; let the budget run out instead
        if step > 0 and np.array_equal(new, beta):
            status = Status.CONVERGED
            break
        beta = new
        s = support(beta)
        r = data.y - X[:, s] @ beta[s]
    return FitResult(beta, support(beta), it, status, float(np.linalg.norm(r)),
                     time.perf_counter() - t0)


@dataclass
class McpConfig:
    gamma: float = 2.7
    n_lambdas: int = 100
    alpha_min_ratio: float = 1e-4
    max_inner_iters: int = 1000
    tol: float = 1e-8
    L: int | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not 0 < self.alpha_min_ratio < 1:
            raise ValueError("alpha_min_ratio must lie in (0, 1)")
        if self.n_lambdas < 1 or self.max_inner_iters < 1:
            raise ValueError("n_lambdas and max_inner_iters must be >= 1")


def mcp_threshold(z, lam, gamma):
    """Minimax concave thresholding (unit step), vectorized over ``z``.

    0 on ``|z| <= lam``, ``sign(z)(|z| - lam)/(1 - 1/gamma)`` up to
    ``gamma*lam``, identity beyond.
    """
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    mid = np.sign(z) * (a - lam) / (1.0 - 1.0 / gamma)
    out = np.where(a > gamma * lam, z, np.where(a > lam, mid, 0.0))
    return out if out.ndim else float(out)


def _cd_sweep(X, beta, r, idx, lam, gamma, n):
    """One cyclic pass of coordinate-wise MCP updates over ``idx`` (in place)."""
    change = 0.0
    for j in idx:
        xj = X[:, j]
        old = beta[j]
        z = old + float(xj @ r) / n
        a = abs(z)
        if a <= lam:
            b = 0.0
        elif a <= gamma * lam:
            b = math.copysign((a - lam) / (1.0 - 1.0 / gamma), z)
        else:
            b = z
        if b != old:
            r -= (b - old) * xj
            beta[j] = b
            change = max(change, abs(b - old))
    return change


def mcp_fit(data: RegressionData, lam: float, cfg: McpConfig | None = None,
            beta0=None) -> FitResult:
    """MCP-penalized least squares at a single ``lam``.

    Coordinates are updated one at a time by ``mcp_threshold(beta_j +
    x_j'r/n, lam, gamma)``; with unit-norm columns (``||x_j||^2 = n``) each
    update exactly minimizes the objective in that coordinate. Sweeps cycle
    over the current support plus every zero coordinate whose correlation
    exceeds ``lam``, and finish when a full vectorized check finds no
    coordinate that would move by ``tol`` or more.
    """
    cfg = cfg or McpConfig()
    t0 = time.perf_counter()
    X, y, n, lam, gamma = data.X, data.y, data.n, float(lam), cfg.gamma
    beta = np.zeros(data.p) if beta0 is None else np.array(beta0, dtype=float)
    s = support(beta)
    r = y - X[:, s] @ beta[s]
    status = Status.MAX_ITERS
    it = 0
    while it < cfg.max_inner_iters:
        z = beta + (X.T @ r) / n
        moved = np.abs(mcp_threshold(z, lam, gamma) - beta) >= cfg.tol
        work = np.flatnonzero(moved | (beta != 0))
        if not moved.any():
            status = Status.CONVERGED
            break
        while it < cfg.max_inner_iters:
            it += 1
            if _cd_sweep(X, beta, r, work, lam, gamma, n) < cfg.tol:
                break
    s = support(beta)
    r = y - X[:, s] @ beta[s]
    return FitResult(beta, s, it, status, float(np.linalg.norm(r)),
                     time.perf_counter() - t0, lam=lam)


def mcp_path_fit(data: RegressionData, cfg: McpConfig | None = None) -> SolutionPath:
    """Warm-started MCP fits on a geometric grid from ``lam_max`` down to
    ``alpha_min_ratio * lam_max``, each scored by HBIC.

    The path stops early once the residual norm reaches ``cfg.epsilon`` (the
    entry is kept) or the support grows beyond ``L`` (the entry is dropped).
    Inner loops that hit ``max_inner_iters`` stay on the path with status
    ``MaxIters``.
    """
    cfg = cfg or McpConfig()
    L = default_L(data.n) if cfg.L is None else cfg.L
    lam_max = float(np.max(np.abs(data.X.T @ data.y))) / data.n
    path = SolutionPath()
    if lam_max == 0.0:
        fit = mcp_fit(data, 0.0, cfg)
        path.append(PathEntry(0, fit, hbic_score(fit, data), lam=0.0))
        return path
    lams = lam_max * cfg.alpha_min_ratio ** (np.arange(cfg.n_lambdas) / max(cfg.n_lambdas - 1, 1))
    beta = None
    for lam in lams:
        fit = mcp_fit(data, float(lam), cfg, beta0=beta)
        if not np.all(np.isfinite(fit.beta)) or fit.size > L:
            break
        path.append(PathEntry(fit.size, fit, hbic_score(fit, data), lam=float(lam)))
        beta = fit.beta
        if cfg.epsilon is not None and fit.residual_norm <= cfg.epsilon:
            break
    return path
