"""Design-matrix regularity constants and error-bound checks on small instances.

The sparse Riesz bounds ``c-(s), c+(s)`` and the sparse orthogonality
constant ``theta_{a,b}`` are computed exactly by enumerating column subsets,
which is exponential in the subset size. Every enumeration is guarded by a
budget of ``MAX_SUBSETS`` subsets and raises :class:`TooLarge` beyond it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import DenominatorVanishes, RankDeficientActiveSet, TooLarge
from .model import RegressionData
from .solver import SdarConfig, sdar_fit, top_T_indices

__all__ = [
    "MAX_SUBSETS",
    "RecoveryDiagnostics",
    "mutual_coherence",
    "src_constants",
    "src_spectrum_by_size",
    "sparse_orthogonality",
    "orthogonality_by_size",
    "gamma_factor",
    "gamma_mu_factor",
    "l2_bound_constants",
    "oracle_estimator",
    "relative_magnitude",
    "tail_size",
    "noise_l2",
    "noise_linf",
    "error_bounds",
    "compute_diagnostics",
    "regularity_checks",
    "error_bound_trace",
    "iteration_bound",
]

MAX_SUBSETS = 10 ** 6
_CHUNK = 50_000
_SLACK = 1e-12


def _gram(X):
    X = np.asarray(X, dtype=float)
    return X.T @ X / X.shape[0]


def mutual_coherence(X) -> float:
    """Largest off-diagonal ``|X'X/n|`` entry."""
    G = _gram(X)
    if G.shape[0] < 2:
        raise ValueError("mutual coherence needs at least two columns")
    off = np.abs(G - np.diag(np.diag(G)))
    return float(off.max())


def _count_subsets(p, s):
    return sum(math.comb(p, k) for k in range(1, s + 1))


def _count_pairs(p, a, b):
    return sum(math.comb(p, i) * math.comb(p - i, j)
               for i in range(1, a + 1) for j in range(1, b + 1))


def _combo_chunks(p, s):
    it = combinations(range(p), s)
    while True:
        block = list(_take(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _take(it, k):
    for _ in range(k):
        try:
            yield next(it)
        except StopIteration:
            return


def src_spectrum_by_size(X, s: int, max_subsets: int = MAX_SUBSETS) -> dict[int, tuple[float, float]]:
    """For each size ``k <= s``: extreme eigenvalues of ``X_A'X_A/n`` over ``|A| = k``."""
    p = np.shape(X)[1]
    s = min(s, p)
    if _count_subsets(p, s) > max_subsets:
        raise TooLarge(f"{_count_subsets(p, s)} subsets of size <= {s} exceed {max_subsets}")
    G = _gram(X)
    out = {}
    for k in range(1, s + 1):
        lo, hi = math.inf, -math.inf
        for idx in _combo_chunks(p, k):
            ev = np.linalg.eigvalsh(G[idx[:, :, None], idx[:, None, :]])
            lo = min(lo, float(ev[:, 0].min()))
            hi = max(hi, float(ev[:, -1].max()))
        out[k] = (lo, hi)
    return out


def src_constants(X, s: int, max_subsets: int = MAX_SUBSETS) -> tuple[float, float]:
    """``(c-(s), c+(s))``: extreme eigenvalues of ``X_A'X_A/n`` over all ``|A| <= s``."""
    by_size = src_spectrum_by_size(X, s, max_subsets)
    return (min(v[0] for v in by_size.values()), max(v[1] for v in by_size.values()))


def _pair_norm_max(G, p, a, b):
    best = 0.0
    split = list(combinations(range(a + b), a))
    A_pos = np.array(split, dtype=np.intp)
    B_pos = np.array([[i for i in range(a + b) if i not in s] for s in split], dtype=np.intp)
    for U in _combo_chunks(p, a + b):
        A = U[:, A_pos].reshape(-1, a)
        B = U[:, B_pos].reshape(-1, b)
        blocks = G[A[:, :, None], B[:, None, :]]
        sv = np.linalg.svd(blocks, compute_uv=False)
        best = max(best, float(sv[:, 0].max()))
    return best


def orthogonality_by_size(X, a: int, b: int, max_subsets: int = MAX_SUBSETS,
                          max_total: int | None = None) -> dict[tuple[int, int], float]:
    """For each ``(i, j)`` with ``i <= a, j <= b`` (and ``i + j <= max_total``):
    max ``||X_A'X_B||/n`` over disjoint ``|A| = i, |B| = j``."""
    p = np.shape(X)[1]
    if _count_pairs(p, a, b) > max_subsets:
        raise TooLarge(f"{_count_pairs(p, a, b)} subset pairs exceed {max_subsets}")
    G = _gram(X)
    max_total = a + b if max_total is None else max_total
    return {(i, j): (_pair_norm_max(G, p, i, j) if i + j <= p else 0.0)
            for i in range(1, a + 1) for j in range(1, b + 1) if i + j <= max_total}


def sparse_orthogonality(X, a: int, b: int, max_subsets: int = MAX_SUBSETS) -> float:
    """theta_{a,b}: max spectral norm of ``X_A'X_B/n`` over disjoint ``|A| <= a, |B| <= b``."""
    if a < 1 or b < 1:
        return 0.0
    return max(orthogonality_by_size(X, a, b, max_subsets).values())


def gamma_factor(theta_TT: float, c_minus_T: float) -> float:
    """Contraction factor of the l2 error recursion."""
    if not c_minus_T > 0:
        raise ValueError("c_minus_T must be positive")
    t, c = theta_TT, c_minus_T
    r2 = 1.0 + math.sqrt(2.0)
    return (2.0 * t + r2 * t * t) / (c * c) + r2 * t / c


def gamma_mu_factor(T: int, mu: float) -> float:
    """Contraction factor of the l-infinity error recursion under coherence ``mu``."""
    den = 1.0 - (T - 1) * mu
    if den <= 0:
        raise DenominatorVanishes(f"(T-1) mu = {(T - 1) * mu:.4g} >= 1")
    return (1.0 + 2.0 * T * mu) * T * mu / den + 2.0 * T * mu


def l2_bound_constants(theta_TT: float, c_minus_T: float) -> tuple[float, float, float]:
    """``(gamma, b1, b2)`` of the l2 iterate bound ``b1 gamma^k ||beta|| + b2 h``."""
    g = gamma_factor(theta_TT, c_minus_T)
    b1 = 1.0 + theta_TT / c_minus_T
    if theta_TT == 0.0:
        # gamma / theta -> 2 / c^2 + (1 + sqrt 2) / c as theta -> 0
        ratio = 2.0 / c_minus_T ** 2 + (1.0 + math.sqrt(2.0)) / c_minus_T
    else:
        ratio = g / theta_TT
    b2 = ratio / (1.0 - g) * b1 + 1.0 / c_minus_T if g < 1 else math.inf
    return g, b1, b2


def oracle_estimator(data: RegressionData, A_star) -> np.ndarray:
    """Least squares restricted to ``A_star``, zero elsewhere."""
    A = np.sort(np.asarray(A_star, dtype=np.intp))
    beta = np.zeros(data.p)
    if A.size == 0:
        return beta
    if A.size >= data.n:
        raise RankDeficientActiveSet(A, "|A| >= n")
    coef, _, rank, _ = np.linalg.lstsq(data.X[:, A], data.y, rcond=None)
    if rank < A.size:
        raise RankDeficientActiveSet(A)
    beta[A] = coef
    return beta


def relative_magnitude(beta_star, J: int) -> float:
    """Largest over smallest magnitude among the ``J`` largest coefficients."""
    mags = np.abs(np.asarray(beta_star)[top_T_indices(beta_star, J)])
    if mags.min() == 0:
        return math.inf
    return float(mags.max() / mags.min())


def tail_size(beta_star, J: int) -> float:
    """``||tail||_2 + ||tail||_1 / sqrt(J)`` for the coefficients outside the top ``J``."""
    beta_star = np.asarray(beta_star, dtype=float)
    tail = beta_star.copy()
    tail[top_T_indices(beta_star, J)] = 0.0
    return float(np.linalg.norm(tail) + np.abs(tail).sum() / math.sqrt(J))


def _noise_max(X, eta, T, ord, max_subsets):
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if _count_subsets(p, T) > max_subsets:
        raise TooLarge(f"noise functional needs {_count_subsets(p, T)} subsets")
    c = X.T @ np.asarray(eta, dtype=float) / X.shape[0]
    best = 0.0
    for k in range(1, min(T, p) + 1):
        for idx in _combo_chunks(p, k):
            best = max(best, float(np.linalg.norm(c[idx], ord=ord, axis=1).max()))
    return best


def noise_l2(X, eta, T: int, max_subsets: int = MAX_SUBSETS) -> float:
    """max over ``|A| <= T`` of ``||X_A' eta||_2 / n``, by enumeration."""
    return _noise_max(X, eta, T, 2, max_subsets)


def noise_linf(X, eta, T: int, max_subsets: int = MAX_SUBSETS) -> float:
    """max over ``|A| <= T`` of ``||X_A' eta||_inf / n``, by enumeration."""
    return _noise_max(X, eta, T, np.inf, max_subsets)


@dataclass
class RecoveryDiagnostics:
    mu: float
    J: int
    T: int
    c_minus: dict[int, float] = field(default_factory=dict)
    c_plus: dict[int, float] = field(default_factory=dict)
    theta: dict[tuple[int, int], float] = field(default_factory=dict)
    gamma: float | None = None
    gamma_mu: float | None = None
    R: float | None = None
    R_J: float = 0.0
    eps1: float | None = None
    eps2: float | None = None
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def gamma_ok(self) -> bool | None:
        return None if self.gamma is None else self.gamma < 1

    @property
    def coherence_ok(self) -> bool:
        return self.T * self.mu <= 0.25


def error_bounds(diag: RecoveryDiagnostics, sigma: float, n: int, p: int, T: int, J: int,
                 alpha: float = 0.05) -> tuple[float | None, float]:
    """Noise levels entering the high-probability l2 and l-infinity bounds.

    ``eps1 = c+(J) R_J + sigma sqrt(T) sqrt(2 log(p/alpha)/n)`` and
    ``eps2 = (1 + (T-1) mu) R_J + sigma sqrt(2 log(p/alpha)/n)``. ``eps1`` is
    ``None`` when ``c+(J)`` is unavailable and ``R_J > 0``.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    noise = sigma * math.sqrt(2.0 * math.log(p / alpha) / n)
    if diag.R_J == 0.0:
        head1 = 0.0
    elif J in diag.c_plus:
        head1 = diag.c_plus[J] * diag.R_J
    else:
        head1 = None
    eps1 = None if head1 is None else head1 + math.sqrt(T) * noise
    eps2 = (1.0 + (T - 1) * diag.mu) * diag.R_J + noise
    return eps1, eps2


def compute_diagnostics(X, T: int, J: int | None = None, beta_star=None, sigma: float = 0.0,
                        alpha: float = 0.05, max_subsets: int = MAX_SUBSETS) -> RecoveryDiagnostics:
    """Collect every regularity quantity that fits within the enumeration budget.

    Quantities over budget are left at ``None`` and explained in ``skipped``.
    Without ``beta_star`` the coefficients are taken as exactly sparse
    (``R_J = 0``) and ``R`` is unknown.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    J = T if J is None else J
    diag = RecoveryDiagnostics(mu=mutual_coherence(X), J=J, T=T)
    s = max(T, J)
    try:
        for k, (lo, hi) in src_spectrum_by_size(X, s, max_subsets).items():
            prev_lo = diag.c_minus.get(k - 1, math.inf)
            prev_hi = diag.c_plus.get(k - 1, -math.inf)
            diag.c_minus[k] = min(lo, prev_lo)
            diag.c_plus[k] = max(hi, prev_hi)
    except TooLarge as exc:
        diag.skipped["src"] = str(exc)
    try:
        diag.theta[(T, T)] = sparse_orthogonality(X, T, T, max_subsets)
    except TooLarge as exc:
        diag.skipped["theta"] = str(exc)
    if (T, T) in diag.theta and T in diag.c_minus and diag.c_minus[T] > 0:
        diag.gamma = gamma_factor(diag.theta[(T, T)], diag.c_minus[T])
    try:
        diag.gamma_mu = gamma_mu_factor(T, diag.mu)
    except DenominatorVanishes as exc:
        diag.skipped["gamma_mu"] = str(exc)
    if beta_star is not None:
        diag.R = relative_magnitude(beta_star, J)
        diag.R_J = tail_size(beta_star, J)
    diag.eps1, diag.eps2 = error_bounds(diag, sigma, n, p, T, J, alpha)
    return diag


class Check(NamedTuple):
    name: str
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + _SLACK * max(1.0, abs(self.rhs))


def regularity_checks(X, s_max: int, max_subsets: int = MAX_SUBSETS) -> list[Check]:
    """Brute-force the spectral inequalities linking ``c-, c+, theta, mu``.

    Monotonicity is checked on exact-size extremes (the "<=" versions are
    monotone by construction). ``||X_A||`` is computed from an SVD of ``X_A``
    itself, independently of the Gram eigenvalues. Each check reads
    ``lhs <= rhs``; ``Check.ok`` allows ``1e-12`` relative round-off.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    s_max = min(s_max, p)
    mu = mutual_coherence(X)
    spec = src_spectrum_by_size(X, s_max, max_subsets)
    c_minus = {k: min(spec[i][0] for i in range(1, k + 1)) for k in spec}
    c_plus = {k: max(spec[i][1] for i in range(1, k + 1)) for k in spec}
    theta_exact = (orthogonality_by_size(X, s_max - 1, s_max - 1, max_subsets, max_total=s_max)
                   if s_max >= 2 else {})
    checks = []
    for k in range(2, s_max + 1):
        checks.append(Check(f"c+ exact-size monotone s={k}", spec[k - 1][1], spec[k][1]))
        checks.append(Check(f"c- exact-size monotone s={k}", spec[k][0], spec[k - 1][0]))
    for (a, b), th in theta_exact.items():
        if (a + 1, b) in theta_exact:
            checks.append(Check(f"theta monotone in a at ({a},{b})", th, theta_exact[(a + 1, b)]))
        if (a, b + 1) in theta_exact:
            checks.append(Check(f"theta monotone in b at ({a},{b})", th, theta_exact[(a, b + 1)]))
        theta_ab = max(v for (i, j), v in theta_exact.items() if i <= a and j <= b)
        bound = max(c_plus[a + b] - 1.0, 1.0 - c_minus[a + b])
        checks.append(Check(f"theta_ab vs SRC gap at ({a},{b})", theta_ab, bound))
    for a in range(1, s_max + 1):
        worst = 0.0
        for idx in _combo_chunks(p, a):
            sv = np.linalg.svd(X[:, idx].transpose(1, 0, 2), compute_uv=False)
            worst = max(worst, float(sv[:, 0].max()))
        checks.append(Check(f"||X_A|| vs sqrt(n c+) a={a}", worst, math.sqrt(n * c_plus[a])))
        checks.append(Check(f"||X_A|| vs coherence a={a}", worst,
                            math.sqrt(n * (1.0 + (a - 1) * mu))))
    return checks


@dataclass
class ErrorBoundTrace:
    gamma: float
    b1: float
    b2: float
    h2: float
    errors: list[float]
    bounds: list[float]

    @property
    def holds(self) -> bool:
        return all(e <= b + _SLACK * max(1.0, b) for e, b in zip(self.errors, self.bounds))


def error_bound_trace(X, y, beta_star, T: int, max_outer_iters: int = 100,
                   max_subsets: int = MAX_SUBSETS) -> ErrorBoundTrace:
    """Run SDAR with ``T`` on an exactly sparse instance and record, for every
    iterate ``beta^{k+1}``, the error ``||beta^{k+1} - beta*||`` next to the
    deterministic bound ``b1 gamma^k ||beta*|| + b2 h2`` with all constants
    brute-forced."""
    X = np.asarray(X, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    eta = np.asarray(y, dtype=float) - X @ beta_star
    c_minus = src_constants(X, T, max_subsets)[0]
    theta = sparse_orthogonality(X, T, T, max_subsets)
    g, b1, b2 = l2_bound_constants(theta, c_minus)
    h2 = noise_l2(X, eta, T, max_subsets)
    iterates = []
    data = RegressionData(X, y)
    sdar_fit(data, SdarConfig(T=T, max_outer_iters=max_outer_iters),
             callback=lambda st: iterates.append(st.beta.copy()))
    norm_star = float(np.linalg.norm(beta_star))
    errors = [float(np.linalg.norm(b - beta_star)) for b in iterates]
    bounds = [b1 * g ** k * norm_star + b2 * h2 for k in range(len(iterates))]
    return ErrorBoundTrace(g, b1, b2, h2, errors, bounds)


def iteration_bound(X, beta_star, eta, T: int, max_subsets: int = MAX_SUBSETS):
    """Refit budget implied by the coherence analysis for ``T = K``.

    Returns ``(bound, xi)`` where ``xi = 4 h_inf / ((1 - gamma_mu) m)`` is the
    realized ratio in the minimum-signal condition and
    ``bound = ceil(log_{1/gamma_mu}(R / (1 - xi))) + 1``. ``bound`` is ``None``
    when ``T mu > 1/4`` or ``xi >= 1``.
    """
    mu = mutual_coherence(X)
    if T * mu > 0.25:
        return None, math.nan
    g = gamma_mu_factor(T, mu)
    mags = np.abs(beta_star[np.flatnonzero(beta_star)])
    m, R = float(mags.min()), float(mags.max() / mags.min())
    h_inf = noise_linf(X, eta, T, max_subsets)
    xi = 4.0 * h_inf / ((1.0 - g) * m)
    if xi >= 1:
        return None, xi
    if g == 0.0:
        return 1, xi
    k0 = math.ceil(math.log(R / (1.0 - xi)) / math.log(1.0 / g))
    return max(k0, 0) + 1, xi
