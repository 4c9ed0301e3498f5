"""Replicated simulation runs over a grid of settings, written as CSV."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .adaptive import AsdarConfig, asdar_fit, default_L, select_model
from .baselines import McpConfig, grades_fit, mcp_path_fit, omp_fit
from .errors import SdarError
from .metrics import RepRecord, aggregate, exact_support_recovery, relative_error
from .simulate import SimData, SimSpec, derive_seed, simulate
from .solver import SdarConfig, sdar_fit

__all__ = [
    "COLUMNS",
    "SOLVERS",
    "Cell",
    "load_presets",
    "preset_cells",
    "run_solver",
    "run_cell",
    "aggregate_rows",
    "write_rows",
    "read_rows",
    "plot_rows",
]

COLUMNS = ["preset", "design", "n", "p", "K", "sigma", "rho", "R", "solver", "rep",
           "rel_err", "exact_support", "iterations", "wall_ms", "status"]
SOLVERS = ("sdar", "asdar", "omp", "grades", "mcp")


def _L(n, params):
    if "L" in params:
        return int(params["L"])
    if "L_frac" in params:
        return int(params["L_frac"] * n)
    return default_L(n)


def run_solver(name: str, sim: SimData, params: dict | None = None):
    """Fit one solver on one simulated dataset.

    Returns ``(beta, iterations, status)``. The sparsity level ``K`` is
    handed to the solvers that need it (SDAR, OMP, GraDes); ASDAR and MCP
    tune the model size by HBIC.
    """
    params = params or {}
    data, spec = sim.data, sim.spec
    n, K = spec.n, spec.K
    eps = math.sqrt(n) * spec.sigma
    if name == "sdar":
        fit = sdar_fit(data, SdarConfig(T=int(params.get("T", K))))
        return fit.beta, fit.iterations, str(fit.status)
    if name == "asdar":
        L = _L(n, params)
        # a step wider than L would leave an empty ladder
        cfg = AsdarConfig(tau=min(int(params.get("tau", 50)), L), L=L,
                          epsilon=params.get("epsilon", eps))
        path = asdar_fit(data, cfg)
        _, fit = select_model(path)
        total = sum(e.fit.iterations for e in path if e.fit is not None)
        return fit.beta, total, str(fit.status)
    if name == "omp":
        fit = omp_fit(data, int(params.get("K", K)))
        return fit.beta, fit.iterations, str(fit.status)
    if name == "grades":
        fit = grades_fit(data, int(params.get("K", K)), step=params.get("step", 1.0 / 3.0),
                         epsilon=params.get("epsilon", eps),
                         max_iters=params.get("max_iters", n // 2))
        return fit.beta, fit.iterations, str(fit.status)
    if name == "mcp":
        cfg = McpConfig(gamma=params.get("gamma", 2.7), L=_L(n, params),
                        epsilon=params.get("epsilon", float(np.linalg.norm(sim.eta))))
        path = mcp_path_fit(data, cfg)
        _, fit = select_model(path)
        total = sum(e.fit.iterations for e in path if e.fit is not None)
        return fit.beta, total, str(fit.status)
    raise ValueError(f"unknown solver {name!r}; choose from {SOLVERS}")


@dataclass
class Cell:
    spec: SimSpec
    solvers: list[str]
    reps: int
    preset: str = ""
    solver_params: dict = field(default_factory=dict)


def load_presets() -> dict:
    text = resources.files("sdar").joinpath("presets.json").read_text(encoding="utf-8")
    return json.loads(text)


def preset_cells(name: str, reps: int | None = None, presets: dict | None = None) -> list[Cell]:
    presets = presets or load_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    pre = presets[name]
    (key, values), = pre["sweep"].items()
    cells = []
    for v in values:
        spec = SimSpec(**{**pre["base"], key: v})
        cells.append(Cell(spec, list(pre["solvers"]), reps or pre["reps"], name,
                          pre.get("solver_params", {})))
    return cells


def _one_rep(cell: Cell, cell_seed: int, rep: int, timing: bool):
    sim = simulate(cell.spec.with_seed(derive_seed(cell_seed, rep)))
    rows = []
    for solver in cell.solvers:
        row = _row_prefix(cell, solver)
        row["rep"] = rep
        t0 = time.perf_counter()
        try:
            beta, iters, status = run_solver(solver, sim, cell.solver_params.get(solver))
        except (SdarError, ValueError, ArithmeticError) as exc:
            row.update(rel_err="", exact_support="", iterations="", wall_ms="",
                       status=f"Error: {exc}")
            rows.append(row)
            continue
        wall = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        row.update(rel_err=relative_error(beta, sim.beta_star),
                   exact_support=int(exact_support_recovery(beta, sim.support)),
                   iterations=iters, wall_ms=wall, status=status)
        rows.append(row)
    return rows


def _row_prefix(cell: Cell, solver: str) -> dict:
    s = cell.spec
    return {"preset": cell.preset, "design": s.design, "n": s.n, "p": s.p, "K": s.K,
            "sigma": s.sigma, "rho": s.rho, "R": s.R, "solver": solver}


def run_cell(cell: Cell, seed: int, cell_index: int = 0, jobs: int = 1,
             timing: bool = True) -> list[dict]:
    """Per-replication rows for every solver in ``cell``, ordered by (rep, solver).

    Replication ``r`` of cell ``c`` simulates its data from
    ``derive_seed(derive_seed(seed, c), r)``, so results do not depend on
    ``jobs`` or on completion order.
    """
    cell_seed = derive_seed(seed, cell_index)
    reps = range(cell.reps)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda r: _one_rep(cell, cell_seed, r, timing), reps))
    else:
        chunks = [_one_rep(cell, cell_seed, r, timing) for r in reps]
    return [row for chunk in chunks for row in chunk]


def _records(rows):
    return [RepRecord(float(r["rel_err"]), bool(int(r["exact_support"])),
                      int(float(r["iterations"])), float(r["wall_ms"]) / 1e3)
            for r in rows if not str(r["status"]).startswith("Error")]


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """A ``mean`` and an ``sd`` row per (setting, solver), built with :func:`aggregate`."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["rep"] in ("mean", "sd"):
            continue
        key = tuple(r[c] for c in COLUMNS[:9])
        groups.setdefault(key, []).append(r)
    out = []
    for key, members in groups.items():
        recs = _records(members)
        prefix = dict(zip(COLUMNS[:9], key))
        if not recs:
            out.append({**prefix, "rep": "mean", "rel_err": "", "exact_support": "",
                        "iterations": "", "wall_ms": "", "status": "n_reps=0"})
            continue
        s = aggregate(recs)
        failed = len(members) - len(recs)
        status = f"n_reps={s.n_reps}" + (f";errors={failed}" if failed else "")
        out.append({**prefix, "rep": "mean", "rel_err": s.rel_err_mean,
                    "exact_support": s.exact_support_rate, "iterations": s.mean_iterations,
                    "wall_ms": s.mean_wall_time * 1e3, "status": status})
        out.append({**prefix, "rep": "sd", "rel_err": s.rel_err_sd, "exact_support": "",
                    "iterations": s.iterations_sd, "wall_ms": s.wall_time_sd * 1e3,
                    "status": status})
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])


def read_rows(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def plot_rows(rows: list[dict], sweep_key: str, path) -> None:
    """Recovery-rate and iteration curves against the swept parameter, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    means = [r for r in rows if r["rep"] == "mean" and r["rel_err"] != ""]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for solver in dict.fromkeys(r["solver"] for r in means):
        pts = sorted((float(r[sweep_key]), float(r["exact_support"]), float(r["iterations"]))
                     for r in means if r["solver"] == solver)
        xs = [p[0] for p in pts]
        ax1.plot(xs, [p[1] for p in pts], marker="o", label=solver)
        ax2.plot(xs, [p[2] for p in pts], marker="o", label=solver)
    ax1.set_xlabel(sweep_key)
    ax1.set_ylabel("exact support recovery")
    ax1.set_ylim(-0.05, 1.05)
    ax2.set_xlabel(sweep_key)
    ax2.set_ylabel("mean iterations")
    ax1.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
