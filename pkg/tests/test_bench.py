import math

import pytest

from sdar import bench
from sdar.metrics import RepRecord, aggregate
from sdar.simulate import SimSpec


def small_cell(solvers=("sdar", "omp"), reps=3):
    spec = SimSpec(n=60, p=120, K=4, sigma=0.1, rho=0.1, R=5.0, design="ar1",
                   coef_mode="random")
    return bench.Cell(spec, list(solvers), reps, "unit")


def test_presets_load_and_expand():
    presets = bench.load_presets()
    assert {"table1-desk", "figure2-desk", "influence-K", "influence-n", "influence-p",
            "influence-rho"} <= set(presets)
    cells = bench.preset_cells("figure2-desk", reps=2)
    assert [c.spec.K for c in cells] == list(range(3, 50, 2))
    assert all(c.reps == 2 for c in cells)
    t1 = bench.preset_cells("table1-desk")
    assert [(c.spec.n, c.spec.p, c.spec.K, c.spec.rho) for c in t1] == [
        (500, 5000, 40, 0.2), (500, 5000, 40, 0.4), (500, 5000, 40, 0.6)]
    with pytest.raises(KeyError):
        bench.preset_cells("nope")


def test_run_cell_deterministic_and_jobs_independent():
    a = bench.run_cell(small_cell(), seed=5, timing=False)
    b = bench.run_cell(small_cell(), seed=5, jobs=3, timing=False)
    assert a == b
    assert [(r["rep"], r["solver"]) for r in a] == [
        (0, "sdar"), (0, "omp"), (1, "sdar"), (1, "omp"), (2, "sdar"), (2, "omp")]
    assert all(r["status"] == "Converged" for r in a)


@pytest.mark.parametrize("solver", bench.SOLVERS)
def test_every_solver_runs(solver):
    rows = bench.run_cell(small_cell([solver], reps=1), seed=1)
    assert len(rows) == 1 and not rows[0]["status"].startswith("Error")
    assert 0 <= rows[0]["rel_err"] < 1


def test_failures_are_recorded(monkeypatch):
    def boom(name, sim, params=None):
        raise ValueError("synthetic")

    monkeypatch.setattr(bench, "run_solver", boom)
    rows = bench.run_cell(small_cell(["sdar"], reps=2), seed=0)
    assert all(r["status"] == "Error: synthetic" for r in rows)
    agg = bench.aggregate_rows(rows)
    assert agg[0]["status"] == "n_reps=0"


def test_aggregate_rows_equal_aggregate_of_file(tmp_path):
    rows = bench.run_cell(small_cell(reps=4), seed=2)
    rows += bench.aggregate_rows(rows)
    path = tmp_path / "r.csv"
    bench.write_rows(rows, path)
    back = bench.read_rows(path)
    assert list(back[0]) == bench.COLUMNS
    for solver in ("sdar", "omp"):
        reps = [r for r in back if r["solver"] == solver and r["rep"] not in ("mean", "sd")]
        s = aggregate(RepRecord(float(r["rel_err"]), bool(int(r["exact_support"])),
                                int(r["iterations"]), float(r["wall_ms"]) / 1e3) for r in reps)
        mean = next(r for r in back if r["solver"] == solver and r["rep"] == "mean")
        sd = next(r for r in back if r["solver"] == solver and r["rep"] == "sd")
        assert float(mean["rel_err"]) == s.rel_err_mean
        assert float(mean["exact_support"]) == s.exact_support_rate
        assert float(mean["iterations"]) == s.mean_iterations
        assert float(sd["rel_err"]) == s.rel_err_sd
        assert float(mean["wall_ms"]) == pytest.approx(s.mean_wall_time * 1e3, rel=1e-12)


def test_single_rep_sd_is_zero():
    rows = bench.run_cell(small_cell(["sdar"], reps=1), seed=3)
    sd = [r for r in bench.aggregate_rows(rows) if r["rep"] == "sd"][0]
    assert sd["rel_err"] == 0.0 and sd["iterations"] == 0.0 and sd["wall_ms"] == 0.0


def test_plot_writes_svg(tmp_path):
    pytest.importorskip("matplotlib")
    cells = [bench.Cell(SimSpec(n=60, p=120, K=k, sigma=0.1, design="ar1", coef_mode="random",
                                R=5.0), ["sdar"], 2, "unit") for k in (2, 4)]
    rows = [r for i, c in enumerate(cells) for r in bench.run_cell(c, 0, i)]
    rows += bench.aggregate_rows(rows)
    out = tmp_path / "p.svg"
    bench.plot_rows(rows, "K", out)
    assert out.read_text().lstrip().startswith("<?xml")


def test_run_solver_unknown():
    from sdar.simulate import simulate
    with pytest.raises(ValueError):
        bench.run_solver("lasso", simulate(small_cell().spec))


def test_timing_disabled_gives_zero_wall():
    rows = bench.run_cell(small_cell(["sdar"], reps=1), seed=0, timing=False)
    assert rows[0]["wall_ms"] == 0.0 and not math.isnan(rows[0]["rel_err"])
