"""Command-line entry point: ``sdar {fit,simulate,bench,diagnose}``.

Exit codes: 0 success, 2 usage or validation error, 3 runtime failure.
Flags override values from a ``--config`` JSON file, which override defaults.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bench
from .adaptive import AsdarConfig, asdar_fit, default_L, select_model
from .baselines import McpConfig, grades_fit, mcp_path_fit, omp_fit
from .diagnostics import compute_diagnostics
from .errors import SdarError
from .model import load_csv, validate, write_csv
from .simulate import SimSpec, simulate
from .solver import SdarConfig, kkt_residual, sdar_fit

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

DEFAULTS = {
    "fit": {"algo": "sdar", "T": None, "tau": 1, "L": None, "sigma": None,
            "max_iters": None, "seed": 0, "out": None},
    "simulate": {"n": 100, "p": 300, "K": 10, "sigma": 0.5, "rho": 0.0, "R": 100.0,
                 "design": "neighbor", "coef_mode": "head", "seed": 0, "out": "sim"},
    "bench": {"preset": None, "reps": None, "seed": 0, "jobs": 1, "out": "bench.csv",
              "plot": False, "no_timing": False, "solvers": None},
    "diagnose": {"T": 1, "J": None, "sigma": 0.0, "alpha": 0.05, "beta_star": None,
                 "max_subsets": 10 ** 6},
}


class UsageError(Exception):
    pass


def _u64(text):
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sdar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    f = sub.add_parser("fit", help="fit a sparse model to a y,x1,...,xp CSV file")
    f.add_argument("data")
    f.add_argument("--algo", choices=["sdar", "asdar", "omp", "grades", "mcp"], default=S)
    f.add_argument("--T", type=int, default=S, help="model size (sdar, omp, grades)")
    f.add_argument("--tau", type=int, default=S, help="ASDAR size increment")
    f.add_argument("--L", type=int, default=S, help="largest model size (asdar, mcp)")
    f.add_argument("--sigma", type=float, default=S, help="noise level, enables residual stops")
    f.add_argument("--max-iters", dest="max_iters", type=int, default=S)
    f.add_argument("--seed", type=_u64, default=S)
    f.add_argument("--out", default=S, help="output CSV (default: stdout)")
    f.add_argument("--config", default=None)

    s = sub.add_parser("simulate", help="generate a simulated dataset")
    for name, typ in (("n", int), ("p", int), ("K", int), ("sigma", float),
                      ("rho", float), ("R", float)):
        s.add_argument(f"--{name}", type=typ, default=S)
    s.add_argument("--design", choices=["neighbor", "ar1"], default=S)
    s.add_argument("--coef-mode", dest="coef_mode", choices=["head", "random"], default=S)
    s.add_argument("--seed", type=_u64, default=S)
    s.add_argument("--out", default=S, help="output directory")
    s.add_argument("--config", default=None)

    b = sub.add_parser("bench", help="run a replicated simulation preset")
    b.add_argument("--preset", default=S)
    b.add_argument("--reps", type=int, default=S)
    b.add_argument("--seed", type=_u64, default=S)
    b.add_argument("--jobs", type=int, default=S)
    b.add_argument("--solvers", default=S, help="comma-separated subset of the preset's solvers")
    b.add_argument("--out", default=S)
    b.add_argument("--plot", action="store_const", const=True, default=S)
    b.add_argument("--no-timing", dest="no_timing", action="store_const", const=True, default=S,
                   help="write wall_ms = 0 so the CSV is byte-stable")
    b.add_argument("--list", action="store_true", help="list presets and exit")
    b.add_argument("--config", default=None)

    d = sub.add_parser("diagnose", help="design-matrix regularity constants")
    d.add_argument("data")
    d.add_argument("--T", type=int, default=S)
    d.add_argument("--J", type=int, default=S)
    d.add_argument("--sigma", type=float, default=S)
    d.add_argument("--alpha", type=float, default=S)
    d.add_argument("--beta-star", dest="beta_star", default=S,
                   help="CSV with a 'beta' column, enables R and R_J")
    d.add_argument("--max-subsets", dest="max_subsets", type=int, default=S)
    d.add_argument("--config", default=None)
    return ap


def resolve(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[args.command])
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(cfg) - set(opts)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "seed" in cfg:
            cfg["seed"] = _u64(str(cfg["seed"]))
        opts.update(cfg)
    opts.update({k: v for k, v in vars(args).items() if k in opts})
    return opts


def _emit_fit(fh, data, fit, algo, kkt):
    w = csv.writer(fh, lineterminator="\n")
    names = data.names or tuple(f"x{j + 1}" for j in range(data.p))
    fh.write(f"# algo={algo}\n# status={fit.status}\n# iterations={fit.iterations}\n")
    fh.write(f"# kkt_residual={kkt!r}\n# residual_norm={fit.residual_norm!r}\n")
    fh.write("# active=" + " ".join(names[j] for j in fit.active) + "\n")
    w.writerow(["variable", "coefficient", "active"])
    beta = data.to_original_scale(fit.beta)
    on = set(int(j) for j in fit.active)
    for j, name in enumerate(names):
        w.writerow([name, repr(float(beta[j])), int(j in on)])


def cmd_fit(o: dict) -> int:
    path = Path(o["data"])
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        data = load_csv(path, sigma_hint=o["sigma"])
        validate(data)
    except (ValueError, SdarError) as exc:
        raise UsageError(str(exc)) from None
    algo, T = o["algo"], o["T"]
    if algo in ("sdar", "omp", "grades"):
        if T is None:
            raise UsageError(f"--T is required for --algo {algo}")
        if not 1 <= T <= min(data.n - 1, data.p):
            raise UsageError(f"--T must lie in [1, {min(data.n - 1, data.p)}], got {T}")
    if o["tau"] is not None and o["tau"] < 1:
        raise UsageError("--tau must be >= 1")
    eps = None if o["sigma"] is None else math.sqrt(data.n) * o["sigma"]
    L = o["L"] if o["L"] is not None else default_L(data.n)
    if algo == "sdar":
        fit = sdar_fit(data, SdarConfig(T=T, max_outer_iters=o["max_iters"] or 100))
    elif algo == "asdar":
        cfg = AsdarConfig(tau=o["tau"], L=L, epsilon=eps,
                          max_outer_iters=o["max_iters"] or 100)
        _, fit = select_model(asdar_fit(data, cfg))
    elif algo == "omp":
        fit = omp_fit(data, T)
    elif algo == "grades":
        fit = grades_fit(data, T, epsilon=eps or 0.0, max_iters=o["max_iters"])
    else:
        cfg = McpConfig(L=L, epsilon=None)
        if o["max_iters"]:
            cfg.max_inner_iters = o["max_iters"]
        _, fit = select_model(mcp_path_fit(data, cfg))
    kkt = kkt_residual(fit.beta, data, fit.size) if fit.size else math.nan
    if o["out"]:
        with open(o["out"], "w", newline="", encoding="utf-8") as fh:
            _emit_fit(fh, data, fit, algo, kkt)
    else:
        _emit_fit(sys.stdout, data, fit, algo, kkt)
    return EXIT_OK


def cmd_simulate(o: dict) -> int:
    try:
        spec = SimSpec(**{k: o[k] for k in ("n", "p", "K", "sigma", "rho", "R",
                                            "design", "coef_mode", "seed")})
        sim = simulate(spec)
    except (ValueError, SdarError) as exc:
        raise UsageError(str(exc)) from None
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "data.csv", sim.X, sim.y)
    with (out / "beta_star.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "beta"])
        for j, b in enumerate(sim.beta_star):
            w.writerow([f"x{j + 1}", repr(float(b))])
    (out / "support.txt").write_text(
        "".join(f"{j}\n" for j in sim.support), encoding="utf-8")
    (out / "spec.json").write_text(json.dumps(vars(spec), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}/data.csv, beta_star.csv, support.txt, spec.json")
    return EXIT_OK


def cmd_bench(o: dict, list_only: bool = False) -> int:
    presets = bench.load_presets()
    if list_only:
        for name, pre in presets.items():
            print(f"{name}: {pre['description']}")
        return EXIT_OK
    if not o["preset"]:
        raise UsageError("--preset is required (see --list)")
    if o["reps"] is not None and o["reps"] < 1:
        raise UsageError("--reps must be >= 1")
    try:
        cells = bench.preset_cells(o["preset"], o["reps"], presets)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    if o["solvers"]:
        wanted = [s.strip() for s in o["solvers"].split(",") if s.strip()]
        bad = [s for s in wanted if s not in bench.SOLVERS]
        if bad:
            raise UsageError(f"unknown solvers: {', '.join(bad)}")
        for c in cells:
            c.solvers = wanted
    rows = []
    for i, cell in enumerate(cells):
        rows.extend(bench.run_cell(cell, o["seed"], i, jobs=o["jobs"],
                                   timing=not o["no_timing"]))
    rows.extend(bench.aggregate_rows(rows))
    out = Path(o["out"])
    bench.write_rows(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    if o["plot"]:
        (key, _), = presets[o["preset"]]["sweep"].items()
        try:
            bench.plot_rows(rows, key, out.with_suffix(".svg"))
        except Exception as exc:  # plotting is a convenience, never fatal
            print(f"plot skipped: {exc}", file=sys.stderr)
    return EXIT_OK


def _read_beta(path, p):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "beta" not in rows[0]:
        raise UsageError(f"{path}: expected a CSV with a 'beta' column")
    beta = np.array([float(r["beta"]) for r in rows])
    if beta.shape != (p,):
        raise UsageError(f"{path}: expected {p} coefficients, got {beta.size}")
    return beta


def cmd_diagnose(o: dict) -> int:
    path = Path(o["data"])
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        data = load_csv(path)
    except (ValueError, SdarError) as exc:
        raise UsageError(str(exc)) from None
    T = o["T"]
    if not 1 <= T <= data.p:
        raise UsageError(f"--T must lie in [1, {data.p}]")
    beta_star = _read_beta(o["beta_star"], data.p) if o["beta_star"] else None
    # coefficients on the normalized scale
    if beta_star is not None and data.scale is not None:
        beta_star = beta_star / data.scale
    diag = compute_diagnostics(data.X, T, o["J"], beta_star, o["sigma"], o["alpha"],
                               o["max_subsets"])

    def show(name, value):
        print(f"{name} = {value!r}" if not isinstance(value, float) else f"{name} = {value:.6g}")

    show("mu", diag.mu)
    for k in sorted(diag.c_minus):
        show(f"c_minus({k})", diag.c_minus[k])
        show(f"c_plus({k})", diag.c_plus[k])
    for (a, b), v in sorted(diag.theta.items()):
        show(f"theta({a},{b})", v)
    for name in ("gamma", "gamma_mu", "R", "R_J", "eps1", "eps2"):
        v = getattr(diag, name)
        if v is not None:
            show(name, v)
    for name, why in diag.skipped.items():
        print(f"{name}: TooLarge ({why})")
    if diag.gamma is not None:
        print(f"gamma < 1: {'holds' if diag.gamma_ok else 'fails'}")
    print(f"T*mu <= 1/4: {'holds' if diag.coherence_ok else 'fails'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = resolve(args)
        if args.command == "fit":
            return cmd_fit({**opts, "data": args.data})
        if args.command == "simulate":
            return cmd_simulate(opts)
        if args.command == "bench":
            return cmd_bench(opts, list_only=args.list)
        return cmd_diagnose({**opts, "data": args.data})
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"sdar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SdarError as exc:
        print(f"sdar {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
