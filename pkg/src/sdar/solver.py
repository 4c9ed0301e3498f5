"""Support detection and root finding for l0-constrained least squares.

Each step picks the ``T`` largest entries of ``|beta + d|`` as the new active
set, refits least squares on it, and recomputes the dual ``d = X'(y - X beta)/n``
off the active set. The iteration stops as soon as the detected active set
repeats.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CGBreakdown, RankDeficientActiveSet
from .linalg import CgSettings, cg_solve
from .model import FitResult, PrimalDualState, RegressionData, Status, support

__all__ = [
    "SdarConfig",
    "hard_threshold",
    "top_T_indices",
    "kkt_residual",
    "initial_state",
    "sdar_step",
    "sdar_fit",
]

# CG budget used to finish the last refit once the active set has settled
_POLISH_FACTOR = 10


@dataclass
class SdarConfig:
    T: int
    max_outer_iters: int = 100
    beta0: np.ndarray | None = None
    d0: np.ndarray | None = None
    cg: CgSettings = field(default_factory=CgSettings)

    def check(self, data: RegressionData) -> None:
        if not 1 <= self.T <= min(data.n - 1, data.p):
            raise ValueError(
                f"T must satisfy 1 <= T <= min(n-1, p) = {min(data.n - 1, data.p)}, "
                f"got {self.T}")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        for name in ("beta0", "d0"):
            v = getattr(self, name)
            if v is not None and np.shape(v) != (data.p,):
                raise ValueError(f"{name} must have length p = {data.p}")


def hard_threshold(beta, lam):
    """Zero every entry with ``|beta_i| < sqrt(2 lam)``; entries on the boundary survive."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    beta = np.asarray(beta, dtype=float)
    return np.where(np.abs(beta) >= np.sqrt(2.0 * lam), beta, 0.0)


def top_T_indices(v, T):
    """Sorted indices of the ``T`` largest ``|v_i|``; ties go to the smaller index."""
    v = np.asarray(v)
    if not 1 <= T <= v.shape[0]:
        raise ValueError(f"T must lie in [1, {v.shape[0]}], got {T}")
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:T])


def kkt_residual(beta, data: RegressionData, T: int) -> float:
    """``||beta - H(beta + d)||_inf`` with the threshold set at the T-th largest ``|beta + d|``.

    Zero exactly when ``beta`` satisfies the l0 fixed-point system for the
    penalty level implied by a model of size ``T``.
    """
    beta = np.asarray(beta, dtype=float)
    d = data.X.T @ data.residual(beta) / data.n
    z = beta + d
    thresh = np.sort(np.abs(z))[::-1][T - 1]
    kept = np.where(np.abs(z) >= thresh, z, 0.0)
    return float(np.max(np.abs(beta - kept)))


def initial_state(data: RegressionData, cfg: SdarConfig) -> PrimalDualState:
    beta = np.zeros(data.p) if cfg.beta0 is None else np.array(cfg.beta0, dtype=float)
    if cfg.d0 is None:
        d = data.X.T @ data.residual(beta) / data.n
    else:
        d = np.array(cfg.d0, dtype=float)
    return PrimalDualState(beta, d, support(beta), 0)


def _refit(data, active, x0, cg, max_iters, Xty):
    X_A = data.X[:, active]
    settings = CgSettings(max_iters=max_iters, rel_tol=cg.rel_tol)
    try:
        return cg_solve(X_A, data.y, x0, settings, rhs=Xty[active])
    except CGBreakdown as exc:
        raise RankDeficientActiveSet(active, str(exc)) from None


def _finish(data, active, beta_A):
    beta = np.zeros(data.p)
    beta[active] = beta_A
    r = data.y - data.X[:, active] @ beta_A
    d = data.X.T @ r / data.n
    d[active] = 0.0
    return beta, d, r


def _step(state, data, cfg, Xty, active=None):
    if active is None:
        active = top_T_indices(state.beta + state.d, cfg.T)
    max_iters = cfg.cg.resolve(data.p, len(active))
    beta_A, info = _refit(data, active, state.beta[active], cfg.cg, max_iters, Xty)
    beta, d, r = _finish(data, active, beta_A)
    new = PrimalDualState(beta, d, active, state.k + 1)
    assert not np.any(beta * d)
    return new, info, r


def sdar_step(state: PrimalDualState, data: RegressionData, cfg: SdarConfig) -> PrimalDualState:
    """One support-detection plus least-squares refit, warm-started from ``state``."""
    new, _, _ = _step(state, data, cfg, data.X.T @ data.y)
    return new


def sdar_fit(data: RegressionData, cfg: SdarConfig,
             callback: Callable[[PrimalDualState], None] | None = None) -> FitResult:
    """Run SDAR with model size ``cfg.T`` until the active set stops changing.

    ``callback`` receives every iterate. Status is ``Converged`` when the
    detected set repeats immediately, ``CycleDetected`` when an older set
    recurs, ``MaxIters`` when the budget runs out.
    """
    t0 = time.perf_counter()
    cfg.check(data)
    Xty = data.X.T @ data.y
    state = initial_state(data, cfg)
    status = Status.MAX_ITERS
    visited = set()
    nxt = top_T_indices(state.beta + state.d, cfg.T)
    r = data.residual(state.beta)
    info = None
    for _ in range(cfg.max_outer_iters):
        state, info, r = _step(state, data, cfg, Xty, active=nxt)
        if callback is not None:
            callback(state)
        visited.add(state.active.tobytes())
        nxt = top_T_indices(state.beta + state.d, cfg.T)
        if np.array_equal(nxt, state.active):
            status = Status.CONVERGED
            break
        if nxt.tobytes() in visited:
            status = Status.CYCLE_DETECTED
            break

    if status is Status.CONVERGED and not info.converged:
        # the capped CG ran out on the final support; finish that solve
        active = state.active
        budget = _POLISH_FACTOR * (len(active) + cfg.cg.resolve(data.p, len(active)))
        beta_A, _ = _refit(data, active, state.beta[active], cfg.cg, budget, Xty)
        beta, d, r = _finish(data, active, beta_A)
        state = PrimalDualState(beta, d, active, state.k)

    return FitResult(
        beta=state.beta,
        active=state.active,
        iterations=state.k,
        status=status,
        residual_norm=float(np.linalg.norm(r)),
        wall_time=time.perf_counter() - t0,
        d=state.d,
    )
