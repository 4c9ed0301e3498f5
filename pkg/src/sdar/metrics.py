"""Per-replication accuracy metrics and their aggregation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmptyResults, ZeroTruth

__all__ = ["RepRecord", "RepSummary", "relative_error", "exact_support_recovery", "aggregate"]


def relative_error(beta_hat, beta_star) -> float:
    """||beta_hat - beta_star||_2 / ||beta_star||_2."""
    beta_star = np.asarray(beta_star, dtype=float)
    denom = float(np.linalg.norm(beta_star))
    if denom == 0.0:
        raise ZeroTruth("relative error is undefined for a zero target")
    return float(np.linalg.norm(np.asarray(beta_hat, dtype=float) - beta_star)) / denom


def exact_support_recovery(beta_hat, A_star) -> bool:
    est = np.flatnonzero(np.asarray(beta_hat))
    true = np.unique(np.asarray(A_star, dtype=np.intp))
    return est.shape == true.shape and bool(np.all(est == true))


@dataclass(frozen=True)
class RepRecord:
    rel_err: float
    exact_support: bool
    iterations: int
    wall_time: float  # seconds


@dataclass(frozen=True)
class RepSummary:
    rel_err_mean: float
    rel_err_sd: float
    exact_support_rate: float
    mean_iterations: float
    mean_wall_time: float
    n_reps: int
    iterations_sd: float = 0.0
    wall_time_sd: float = 0.0


def _mean_sd(xs):
    m = math.fsum(xs) / len(xs)
    if len(xs) < 2:
        return m, 0.0
    return m, math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def aggregate(results: Iterable[RepRecord]) -> RepSummary:
    """Means and sample standard deviations (divisor n - 1) over replications."""
    results = list(results)
    if not results:
        raise EmptyResults("nothing to aggregate")
    # sorting makes the floating-point sums independent of replication order
    err_m, err_sd = _mean_sd(sorted(r.rel_err for r in results))
    it_m, it_sd = _mean_sd(sorted(float(r.iterations) for r in results))
    wt_m, wt_sd = _mean_sd(sorted(r.wall_time for r in results))
    rate = sum(1 for r in results if r.exact_support) / len(results)
    return RepSummary(err_m, err_sd, rate, it_m, wt_m, len(results), it_sd, wt_sd)
