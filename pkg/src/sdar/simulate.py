"""Seeded simulation designs, coefficient vectors and responses.

Random numbers
--------------
Every draw comes from a :class:`Stream`, a Philox4x64-10 counter-based
generator keyed by the 128-bit pair ``(seed, stream)``. The counter starts
at zero and is incremented before each block, so the words come from the
blocks at counters 1, 2, 3, ... in order (four words per block). Raw 64-bit words are mapped to doubles as
``(w >> 11) * 2**-53`` in ``[0, 1)``. Normals use the Box-Muller transform on
consecutive pairs ``(u1, u2)``::

    rho = sqrt(-2 log(1 - u1)),  z0 = rho cos(2 pi u2),  z1 = rho sin(2 pi u2)

and are emitted in the order ``z0, z1`` per pair. Matrices are filled column
by column. Random subsets use a partial Fisher-Yates shuffle with
``j = i + floor(u (p - i))``. Within one simulation the design uses stream 0,
the coefficients stream 1 and the noise stream 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateScale
from .model import RegressionData

__all__ = [
    "Stream",
    "derive_seed",
    "SimSpec",
    "SimData",
    "gen_design_neighbor",
    "gen_design_ar1",
    "gen_coefficients",
    "gen_response",
    "simulate",
]

DESIGN_STREAM, COEF_STREAM, NOISE_STREAM = 0, 1, 2
_DERIVE_TAG = 0x9E3779B97F4A7C15
_U53 = 2.0 ** -53
_MASK64 = (1 << 64) - 1


class Stream:
    def __init__(self, seed: int, stream: int = 0):
        key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(size)

    def uniform(self, size: int) -> np.ndarray:
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * _U53

    def normal(self, size: int) -> np.ndarray:
        m = (size + 1) // 2
        u = self.uniform(2 * m)
        u1, u2 = u[0::2], u[1::2]
        rho = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.empty(2 * m)
        z[0::2] = rho * np.cos(2.0 * np.pi * u2)
        z[1::2] = rho * np.sin(2.0 * np.pi * u2)
        return z[:size]

    def subset(self, p: int, K: int) -> np.ndarray:
        perm = np.arange(p)
        u = self.uniform(K)
        for i in range(K):
            j = i + int(u[i] * (p - i))
            perm[i], perm[j] = perm[j], perm[i]
        return np.sort(perm[:K])


def derive_seed(master: int, index: int) -> int:
    """Seed for replication ``index``: the first word of the Philox block at
    counter ``index + 1`` under the key ``(master, 0x9E3779B97F4A7C15)``."""
    key = np.array([int(master) & _MASK64, _DERIVE_TAG], dtype=np.uint64)
    counter = np.array([int(index) & _MASK64, 0, 0, 0], dtype=np.uint64)
    return int(np.random.Philox(counter=counter, key=key).random_raw(1)[0])


def _normalize(X):
    return X * (np.sqrt(X.shape[0]) / np.linalg.norm(X, axis=0))


def _gaussian(n, p, stream):
    return stream.normal(n * p).reshape(p, n).T


def gen_design_neighbor(n: int, p: int, rho: float, seed: int) -> np.ndarray:
    """i.i.d. normal columns, normalized, then ``X_j = Xbar_j + rho (Xbar_{j-1} + Xbar_{j+1})``
    for interior ``j``; the first and last columns are copied. Renormalized."""
    if p < 3:
        raise ValueError("the neighbor design needs p >= 3")
    Xbar = _normalize(_gaussian(n, p, Stream(seed, DESIGN_STREAM)))
    X = Xbar.copy()
    X[:, 1:-1] += rho * (Xbar[:, :-2] + Xbar[:, 2:])
    return _normalize(X)


def gen_design_ar1(n: int, p: int, rho: float, seed: int, normalize: bool = True) -> np.ndarray:
    """Rows drawn from N(0, Sigma) with ``Sigma_jk = rho^|j-k|`` through the AR(1)
    recursion across columns."""
    if not abs(rho) < 1:
        raise ValueError("|rho| must be < 1")
    W = _gaussian(n, p, Stream(seed, DESIGN_STREAM))
    Z = np.empty_like(W)
    Z[:, 0] = W[:, 0]
    c = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        Z[:, j] = rho * Z[:, j - 1] + c * W[:, j]
    return _normalize(Z) if normalize else Z


@dataclass(frozen=True)
class SimSpec:
    """Simulation parameters.

    ``coef_mode="head"`` scales magnitudes to the detection limit,
    ``m = sigma sqrt(2 log p / n)``, on ``[m, R m]``; ``"random"`` fixes
    ``m = 1`` and draws on ``[1, R]``. Both place the support uniformly at
    random and draw signs with equal probability.
    """

    n: int
    p: int
    K: int
    sigma: float = 1.0
    rho: float = 0.0
    R: float = 100.0
    design: str = "neighbor"  # or "ar1"
    coef_mode: str = "head"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.K <= self.p:
            raise ValueError(f"K must lie in [0, p], got K={self.K}, p={self.p}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if self.design not in ("neighbor", "ar1"):
            raise ValueError(f"unknown design {self.design!r}")
        if self.coef_mode not in ("head", "random"):
            raise ValueError(f"unknown coef_mode {self.coef_mode!r}")
        if self.design == "neighbor" and not 0 <= self.rho < 1:
            raise ValueError("the neighbor design needs rho in [0, 1)")
        if self.design == "ar1" and not abs(self.rho) < 1:
            raise ValueError("the AR(1) design needs |rho| < 1")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_seed(self, seed: int) -> "SimSpec":
        return replace(self, seed=seed)


def gen_coefficients(spec: SimSpec) -> np.ndarray:
    if spec.coef_mode == "head":
        m = spec.sigma * math.sqrt(2.0 * math.log(spec.p) / spec.n)
        if m == 0.0:
            raise DegenerateScale("coef_mode 'head' needs sigma > 0")
    else:
        m = 1.0
    s = Stream(spec.seed, COEF_STREAM)
    idx = s.subset(spec.p, spec.K)
    u = s.uniform(2 * spec.K)
    mags = m + (spec.R * m - m) * u[:spec.K]
    signs = np.where(u[spec.K:] < 0.5, -1.0, 1.0)
    beta = np.zeros(spec.p)
    beta[idx] = signs * mags
    return beta


def gen_noise(n: int, sigma: float, seed: int) -> np.ndarray:
    return sigma * Stream(seed, NOISE_STREAM).normal(n)


def gen_response(X, beta_star, sigma: float, seed: int) -> np.ndarray:
    """``y = X beta_star + eta`` with ``eta_i ~ N(0, sigma^2)``."""
    X = np.asarray(X)
    beta_star = np.asarray(beta_star, dtype=float)
    if X.shape[1] != beta_star.shape[0]:
        raise ValueError("X and beta_star dimensions disagree")
    return X @ beta_star + gen_noise(X.shape[0], sigma, seed)


@dataclass(frozen=True, eq=False)
class SimData:
    spec: SimSpec
    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray
    support: np.ndarray
    eta: np.ndarray

    @property
    def data(self) -> RegressionData:
        return RegressionData(self.X, self.y, sigma_hint=self.spec.sigma)


def simulate(spec: SimSpec) -> SimData:
    if spec.design == "neighbor":
        X = gen_design_neighbor(spec.n, spec.p, spec.rho, spec.seed)
    else:
        X = gen_design_ar1(spec.n, spec.p, spec.rho, spec.seed)
    beta = gen_coefficients(spec)
    eta = gen_noise(spec.n, spec.sigma, spec.seed)
    y = X @ beta + eta
    return SimData(spec, X, y, beta, np.flatnonzero(beta), eta)
