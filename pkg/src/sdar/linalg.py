"""Dense linear-algebra primitives.

Design matrices are plain ``numpy.ndarray`` objects of shape ``(n, p)``.
Nothing here mutates its inputs, so a matrix can be shared freely between
concurrent callers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CGBreakdown, DimensionMismatch, NonFinite, ZeroColumn

__all__ = [
    "CgSettings",
    "CgInfo",
    "default_cg_iters",
    "normalize_columns",
    "correlation",
    "cg_solve",
]

_TINY_NORM = 1e-300


def default_cg_iters(p: int, T: int) -> int:
    """CG budget keeping one refit at O(np) flops: floor(p / 2T) in [10, 500]."""
    T = max(int(T), 1)
    return int(min(max(p // (2 * T), 10), 500))


@dataclass(frozen=True)
class CgSettings:
    """Conjugate-gradient controls.

    ``max_iters=None`` defers the budget to the caller, which knows ``p`` and
    the active-set size (see :func:`default_cg_iters`).
    """

    max_iters: int | None = None
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")

    def resolve(self, p: int, T: int) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return default_cg_iters(p, T)


class CgInfo(NamedTuple):
    iterations: int
    converged: bool
    residual_norm: float  # ||X_A'X_A x - X_A'y||_2
    rhs_norm: float


def normalize_columns(X):
    """Rescale every column of ``X`` to Euclidean norm sqrt(n).

    Returns
    -------
    Xn : ndarray, shape (n, p)
        Normalized copy of ``X``.
    scale : ndarray, shape (p,)
        Factor applied to each column, ``Xn[:, j] = X[:, j] * scale[j]``.
        A coefficient fitted on ``Xn`` maps back to the original column scale
        as ``beta * scale``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("design matrix")
    n = X.shape[0]
    norms = np.linalg.norm(X, axis=0)
    bad = np.flatnonzero(norms < _TINY_NORM)
    if bad.size:
        raise ZeroColumn(int(bad[0]), float(norms[bad[0]]))
    scale = np.sqrt(n) / norms
    return X * scale, scale


def correlation(X, r):
    """X' r / n."""
    X = np.asarray(X)
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.shape[0] != X.shape[0]:
        raise DimensionMismatch(
            f"residual has shape {r.shape}, design has {X.shape[0]} rows")
    return X.T @ r / X.shape[0]


def cg_solve(X_A, y, x0=None, cfg: CgSettings | None = None, rhs=None):
    """Solve the normal equations ``X_A' X_A x = X_A' y`` by conjugate gradients.

    The Gram matrix is never formed; each iteration costs two products with
    ``X_A``. ``rhs`` may carry a precomputed ``X_A' y``.

    Returns ``(x, info)``. When the budget runs out before the relative
    residual drops below ``cfg.rel_tol`` the last iterate is returned with
    ``info.converged = False``.

    Raises
    ------
    CGBreakdown
        If the curvature ``p'Gp`` falls below ``1e-300 * ||p||^2``.
    """
    cfg = cfg or CgSettings()
    X_A = np.asarray(X_A, dtype=float)
    if X_A.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {X_A.shape}")
    n, a = X_A.shape
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DimensionMismatch(f"y has shape {y.shape}, expected ({n},)")
    max_iters = cfg.max_iters if cfg.max_iters is not None else max(10, 2 * a)

    b = X_A.T @ y if rhs is None else np.asarray(rhs, dtype=float)
    x = np.zeros(a) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (a,) or b.shape != (a,):
        raise DimensionMismatch("warm start / rhs length must equal |A|")
    if a == 0:
        return x, CgInfo(0, True, 0.0, 0.0)

    bnorm = float(np.linalg.norm(b))
    tol = cfg.rel_tol * bnorm

    def true_residual(x):
        return b - X_A.T @ (X_A @ x)

    r = true_residual(x)
    rr = float(r @ r)
    it = 0
    if np.sqrt(rr) <= tol:
        return x, CgInfo(0, True, float(np.sqrt(rr)), bnorm)
    p = r.copy()
    while it < max_iters:
        Xp = X_A @ p
        pGp = float(Xp @ Xp)
        if not pGp > _TINY_NORM * float(p @ p):
            raise CGBreakdown(f"p'Gp = {pGp:.3g} at iteration {it}")
        alpha = rr / pGp
        x += alpha * p
        r -= alpha * (X_A.T @ Xp)
        rr_new = float(r @ r)
        it += 1
        if np.sqrt(rr_new) <= tol:
            # the recurrence drifts from the true residual; confirm before exit
            r = true_residual(x)
            rr_new = float(r @ r)
            if np.sqrt(rr_new) <= tol:
                return x, CgInfo(it, True, float(np.sqrt(rr_new)), bnorm)
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = float(np.linalg.norm(true_residual(x)))
    return x, CgInfo(it, res <= tol, res, bnorm)
