"""Problem data, solver state and result containers."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BadColumnNorm, DimensionMismatch, NonFinite
from .linalg import normalize_columns

__all__ = [
    "Status",
    "RegressionData",
    "PrimalDualState",
    "FitResult",
    "PathEntry",
    "SolutionPath",
    "validate",
    "load_csv",
    "support",
    "write_csv",
]


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    CYCLE_DETECTED = "CycleDetected"
    EARLY_STOP = "EarlyStop"

    def __str__(self):
        return self.value


def support(beta):
    return np.flatnonzero(beta)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RegressionData:
    """Response ``y`` and design ``X`` with sqrt(n)-normalized columns.

    ``scale`` records the factor applied to each raw column, so a coefficient
    ``b`` on the normalized scale is ``b * scale`` on the raw scale.
    """

    X: np.ndarray
    y: np.ndarray
    sigma_hint: float | None = None
    scale: np.ndarray | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X))
        object.__setattr__(self, "y", _frozen(self.y))
        if self.scale is not None:
            object.__setattr__(self, "scale", _frozen(self.scale))
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise DimensionMismatch(
                f"X has shape {self.X.shape}, y has shape {self.y.shape}")

    @classmethod
    def from_raw(cls, X, y, sigma_hint=None, names=None):
        """Normalize the columns of a raw design and remember the scales."""
        Xn, scale = normalize_columns(X)
        return cls(Xn, y, sigma_hint=sigma_hint, scale=scale,
                   names=None if names is None else tuple(names))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def residual(self, beta):
        return self.y - self.X @ beta

    def to_original_scale(self, beta):
        return beta if self.scale is None else beta * self.scale


def validate(data: RegressionData, rtol: float = 1e-8) -> None:
    """Raise if ``data`` violates its invariants, return ``None`` otherwise."""
    if not np.all(np.isfinite(data.X)):
        i, j = np.argwhere(~np.isfinite(data.X))[0]
        raise NonFinite(f"X[{i}, {j}]")
    if not np.all(np.isfinite(data.y)):
        i = int(np.flatnonzero(~np.isfinite(data.y))[0])
        raise NonFinite(f"y[{i}]")
    expected = np.sqrt(data.n)
    norms = np.linalg.norm(data.X, axis=0)
    bad = np.flatnonzero(np.abs(norms - expected) > rtol * expected)
    if bad.size:
        j = int(bad[0])
        raise BadColumnNorm(j, float(norms[j]), float(expected))


@dataclass
class PrimalDualState:
    """Primal coefficients, dual correlations and the active set at step ``k``.

    ``active`` is a sorted integer array; ``beta`` vanishes off it and ``d``
    vanishes on it, hence ``beta * d == 0`` componentwise.
    """

    beta: np.ndarray
    d: np.ndarray
    active: np.ndarray
    k: int = 0

    def check(self) -> None:
        inactive = np.ones(self.beta.shape[0], dtype=bool)
        inactive[self.active] = False
        assert not np.any(self.beta[inactive]), "beta nonzero off the active set"
        assert not np.any(self.d[self.active]), "d nonzero on the active set"
        assert not np.any(self.beta * self.d), "complementarity violated"


@dataclass
class FitResult:
    beta: np.ndarray
    active: np.ndarray
    iterations: int
    status: Status
    residual_norm: float
    wall_time: float = 0.0  # seconds
    d: np.ndarray | None = field(default=None, repr=False)
    lam: float | None = None

    @property
    def size(self) -> int:
        return int(len(self.active))


@dataclass
class PathEntry:
    T: int
    fit: FitResult | None
    hbic: float
    lam: float | None = None
    error: str | None = None


@dataclass
class SolutionPath:
    """Fits indexed by model size (ASDAR) or by penalty level (MCP).

    Size-indexed paths have strictly increasing ``T``; penalty-indexed
    paths have strictly decreasing ``lam`` and ``T`` is the support size.
    """

    entries: list[PathEntry] = field(default_factory=list)

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        if not self.entries:
            return
        lams = [e.lam for e in self.entries]
        if all(l is None for l in lams):
            Ts = [e.T for e in self.entries]
            if any(b <= a for a, b in zip(Ts, Ts[1:])):
                raise ValueError(f"path sizes must increase strictly: {Ts}")
        elif any(l is None for l in lams):
            raise ValueError("a path cannot mix size- and penalty-indexed entries")
        elif any(b >= a for a, b in zip(lams, lams[1:])):
            raise ValueError("penalty levels must decrease strictly")

    def append(self, entry: PathEntry) -> None:
        self.entries.append(entry)
        self.check()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def sizes(self) -> list[int]:
        return [e.T for e in self.entries]


def load_csv(path, sigma_hint=None) -> RegressionData:
    """Read a ``y,x1,...,xp`` CSV file and normalize the predictor columns."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "y":
            raise ValueError(f"{path}: header must be 'y,x1,...,xp', got {header[:3]}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    M = np.array(rows)
    if not np.all(np.isfinite(M)):
        raise NonFinite(f"{path}")
    return RegressionData.from_raw(M[:, 1:], M[:, 0], sigma_hint=sigma_hint,
                                   names=header[1:])


def write_csv(path, X, y, names: Sequence[str] | None = None) -> None:
    """Write a dataset in the ``y,x1,...,xp`` layout read by :func:`load_csv`."""
    X = np.asarray(X)
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(X.shape[1])]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", *names])
        for yi, row in zip(y, X):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in row)])
