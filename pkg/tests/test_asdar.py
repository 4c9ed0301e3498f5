import math

import numpy as np
import pytest

from conftest import orthogonal_data
from sdar import adaptive
from sdar.adaptive import AsdarConfig, asdar_fit, default_L, hbic_score, select_model
from sdar.errors import EmptyPath, RankDeficientActiveSet
from sdar.model import FitResult, PathEntry, RegressionData, SolutionPath, Status
from sdar.simulate import SimSpec, simulate


@pytest.mark.parametrize("n,L", [(500, 80), (100, 21), (30, 8), (5000, 587)])
def test_default_L(n, L):
    assert default_L(n) == L == math.floor(n / math.log(n))


def _fake_fit(size, rss, p=10):
    return FitResult(np.zeros(p), np.arange(size), 1, Status.CONVERGED, math.sqrt(rss))


def test_hbic_frozen_value():
    # n=500, p=1000, RSS/n = 1, |A| = 10; value from 50-digit arithmetic
    data = RegressionData(np.zeros((500, 1000)), np.zeros(500))
    score = hbic_score(_fake_fit(10, 500.0, 1000), data)
    assert score == pytest.approx(0.25239593064979994, rel=1e-14)


def test_hbic_perfect_fit_is_minus_infinity():
    data = RegressionData(np.zeros((20, 5)), np.zeros(20))
    assert hbic_score(_fake_fit(2, 0.0, 5), data) == -math.inf


def _path(*pairs):
    return SolutionPath([PathEntry(T, _fake_fit(T, 1.0), h) for T, h in pairs])


def test_select_model_minimum_and_ties():
    assert select_model(_path((1, 3.0), (2, 1.0), (3, 2.0)))[0] == 2
    assert select_model(_path((1, 1.0), (2, 1.0)))[0] == 1
    assert select_model(_path((1, 0.5), (2, -math.inf)))[0] == 2
    assert select_model(_path((1, math.nan), (2, math.nan)))[0] == 2
    with pytest.raises(EmptyPath):
        select_model(SolutionPath())
    with pytest.raises(EmptyPath):
        select_model(SolutionPath([PathEntry(1, None, math.inf, error="boom")]))


def test_config_validation():
    data = orthogonal_data(16, np.r_[np.ones(2), np.zeros(14)])
    with pytest.raises(ValueError):
        asdar_fit(data, AsdarConfig(tau=0))
    with pytest.raises(ValueError):
        asdar_fit(data, AsdarConfig(tau=5, L=3))
    with pytest.raises(ValueError):
        asdar_fit(data, AsdarConfig(ladder="fibonacci"))


def test_ladders():
    cfg = AsdarConfig(tau=3)
    assert list(cfg.sizes(10, 100)) == [3, 6, 9]
    assert list(cfg.sizes(10, 7)) == [3, 6]
    geo = AsdarConfig(tau=2, ladder="geometric")
    assert list(geo.sizes(20, 100)) == [2, 4, 8, 16]


def test_path_sizes_increase_and_residual_stop():
    sim = simulate(SimSpec(n=200, p=400, K=6, sigma=0.3, rho=0.1, R=10.0,
                           design="ar1", coef_mode="random", seed=4))
    path = asdar_fit(sim.data, AsdarConfig(tau=1))
    sizes = path.sizes
    assert sizes == list(range(1, len(sizes) + 1))
    last = path.entries[-1].fit
    # stopped at the first size whose residual reached sqrt(n) sigma
    assert last.residual_norm <= math.sqrt(200) * 0.3
    assert all(e.fit.residual_norm > math.sqrt(200) * 0.3 for e in path.entries[:-1])
    T, fit = select_model(path)
    assert fit.active.tolist() == sim.support.tolist()


def test_no_sigma_runs_to_L():
    sim = simulate(SimSpec(n=60, p=100, K=3, sigma=0.1, design="ar1", coef_mode="random",
                           R=5.0, seed=2))
    data = RegressionData(sim.X, sim.y)  # no sigma_hint
    path = asdar_fit(data, AsdarConfig(tau=2, L=9))
    assert path.sizes == [2, 4, 6, 8]
    noisy = RegressionData(sim.X, sim.y, sigma_hint=0.1)
    assert asdar_fit(noisy, AsdarConfig(tau=2, L=9, epsilon=math.inf)).sizes == [2, 4, 6, 8]
    unscored = asdar_fit(data, AsdarConfig(tau=2, L=9, hbic=False))
    assert select_model(unscored)[0] == 8


def test_failed_size_is_recorded_and_ladder_continues(monkeypatch):
    sim = simulate(SimSpec(n=60, p=100, K=3, sigma=0.1, design="ar1", coef_mode="random",
                           R=5.0, seed=2))
    real = adaptive.sdar_fit

    def flaky(data, cfg, callback=None):
        if cfg.T == 2:
            raise RankDeficientActiveSet([0, 1], "injected")
        return real(data, cfg, callback)

    monkeypatch.setattr(adaptive, "sdar_fit", flaky)
    path = asdar_fit(RegressionData(sim.X, sim.y), AsdarConfig(tau=1, L=4))
    assert path.sizes == [1, 2, 3, 4]
    bad = path.entries[1]
    assert bad.fit is None and bad.hbic == math.inf and "injected" in bad.error
    assert all(e.fit is not None for i, e in enumerate(path.entries) if i != 1)


def test_warm_start_chain_matches_cold_fits_on_orthogonal():
    beta = np.zeros(32)
    beta[[2, 9, 20]] = [5.0, -4.0, 3.0]
    data = orthogonal_data(32, beta)
    path = asdar_fit(data, AsdarConfig(tau=1, L=6, epsilon=1e-9))
    assert path.sizes == [1, 2, 3]
    np.testing.assert_allclose(path.entries[-1].fit.beta, beta, atol=1e-12)
