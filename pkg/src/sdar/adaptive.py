"""Adaptive SDAR: a ladder of model sizes with warm starts and HBIC selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPath, SdarError
from .linalg import CgSettings
from .model import FitResult, PathEntry, RegressionData, SolutionPath
from .solver import SdarConfig, sdar_fit

__all__ = ["AsdarConfig", "default_L", "hbic_score", "asdar_fit", "select_model"]


def default_L(n: int) -> int:
    """Largest model size worth fitting with ``n`` samples: floor(n / log n)."""
    return int(math.floor(n / math.log(n)))


@dataclass
class AsdarConfig:
    """Controls for :func:`asdar_fit`.

    ``epsilon=None`` falls back to ``sqrt(n) * sigma_hint`` when the data
    carry a noise level, and disables the residual stop otherwise;
    ``epsilon=inf`` always disables it.
    """

    tau: int = 1
    L: int | None = None
    epsilon: float | None = None
    max_T: int | None = None
    hbic: bool = True
    ladder: str = "arithmetic"  # or "geometric": tau, 2 tau, 4 tau, ...
    max_outer_iters: int = 100
    cg: CgSettings = field(default_factory=CgSettings)

    def resolve(self, data: RegressionData):
        L = default_L(data.n) if self.L is None else int(self.L)
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if L < self.tau:
            raise ValueError(f"L = {L} is smaller than tau = {self.tau}")
        if self.ladder not in ("arithmetic", "geometric"):
            raise ValueError(f"unknown ladder {self.ladder!r}")
        cap = min(data.n - 1, data.p)
        if self.max_T is not None:
            cap = min(cap, int(self.max_T))
        eps = self.epsilon
        if eps is None and data.sigma_hint is not None:
            eps = math.sqrt(data.n) * data.sigma_hint
        if eps is not None and math.isinf(eps):
            eps = None  # an infinite tolerance means "never stop on the residual"
        return L, cap, eps

    def sizes(self, L: int, cap: int):
        T, k = self.tau, 1
        while T <= L and T <= cap:
            yield T
            k += 1
            T = self.tau * k if self.ladder == "arithmetic" else self.tau * 2 ** (k - 1)


def hbic_score(fit: FitResult, data: RegressionData) -> float:
    """log(RSS/n) + |A| log(log n) log(p) / n; a perfect fit scores -inf."""
    rss = fit.residual_norm ** 2
    if rss == 0.0:
        return -math.inf
    n, p = data.n, data.p
    return math.log(rss / n) + fit.size * math.log(math.log(n)) * math.log(p) / n


def asdar_fit(data: RegressionData, cfg: AsdarConfig | None = None) -> SolutionPath:
    """Fit SDAR for T = tau, 2 tau, ... with each fit warm-started from the last.

    Stops once the residual norm drops to ``epsilon`` or the next size would
    exceed ``L``. A failing size is recorded on the path (``error`` set,
    ``hbic = inf``) and the ladder carries on from the last good fit.
    """
    cfg = cfg or AsdarConfig()
    L, cap, eps = cfg.resolve(data)
    path = SolutionPath()
    beta = d = None
    for T in cfg.sizes(L, cap):
        scfg = SdarConfig(T=T, max_outer_iters=cfg.max_outer_iters,
                          beta0=beta, d0=d, cg=cfg.cg)
        try:
            fit = sdar_fit(data, scfg)
        except SdarError as exc:
            path.append(PathEntry(T, None, math.inf, error=str(exc)))
            continue
        score = hbic_score(fit, data) if cfg.hbic else math.nan
        path.append(PathEntry(T, fit, score))
        beta, d = fit.beta, fit.d
        if eps is not None and fit.residual_norm <= eps:
            break
    return path


def select_model(path: SolutionPath) -> tuple[int, FitResult]:
    """Entry with the smallest HBIC; ties go to the smaller model.

    On an unscored path (``hbic=False``) the last successful entry wins.
    """
    good = [e for e in path if e.fit is not None]
    if good and all(math.isnan(e.hbic) for e in good):
        return good[-1].T, good[-1].fit
    best = None
    for e in good:
        if math.isnan(e.hbic):
            continue
        if best is None or e.hbic < best.hbic or (e.hbic == best.hbic and e.T < best.T):
            best = e
    if best is None:
        raise EmptyPath("no successful entry on the path")
    return best.T, best.fit
