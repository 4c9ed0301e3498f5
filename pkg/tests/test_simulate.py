import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdar.errors import DegenerateScale
from sdar.simulate import (
    SimSpec,
    Stream,
    derive_seed,
    gen_coefficients,
    gen_design_ar1,
    gen_design_neighbor,
    gen_response,
    simulate,
)

M64 = (1 << 64) - 1
u64 = st.integers(0, M64)


def philox4x64_10(ctr, key):
    """Reference Philox4x64-10 block function in plain integers."""
    c, k = list(ctr), list(key)
    for _ in range(10):
        p0 = 0xD2E7470EE14C6C93 * c[0]
        p1 = 0xCA5A826395121157 * c[2]
        c = [(p1 >> 64) ^ c[1] ^ k[0], p1 & M64, (p0 >> 64) ^ c[3] ^ k[1], p0 & M64]
        k = [(k[0] + 0x9E3779B97F4A7C15) & M64, (k[1] + 0xBB67AE8584CAA73B) & M64]
    return c


def reference_words(seed, stream, count):
    words, ctr = [], 0
    while len(words) < count:
        ctr += 1  # incremented before each block
        words.extend(philox4x64_10([ctr, 0, 0, 0], [seed, stream]))
    return words[:count]


@settings(max_examples=25, deadline=None)
@given(seed=u64, stream=st.integers(0, 2), count=st.integers(1, 13))
def test_stream_matches_reference_philox(seed, stream, count):
    got = [int(w) for w in Stream(seed, stream).raw(count)]
    assert got == reference_words(seed, stream, count)


def test_frozen_words():
    assert [int(w) for w in Stream(5, 2).raw(2)] == [15619566328700425198, 13223840669503165452]


def test_uniform_and_normal_transforms():
    words = reference_words(42, 0, 6)
    u = [(w >> 11) * 2.0 ** -53 for w in words]
    np.testing.assert_array_equal(Stream(42, 0).uniform(6), u)
    z_ref = []
    for u1, u2 in zip(u[0::2], u[1::2]):
        rho = math.sqrt(-2.0 * math.log1p(-u1))
        z_ref += [rho * math.cos(2 * math.pi * u2), rho * math.sin(2 * math.pi * u2)]
    np.testing.assert_allclose(Stream(42, 0).normal(6), z_ref, rtol=1e-15, atol=1e-15)
    # odd lengths drop the trailing sine
    np.testing.assert_array_equal(Stream(42, 0).normal(5), Stream(42, 0).normal(6)[:5])


def test_uniform_range_and_moments():
    u = Stream(1, 0).uniform(200_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    z = Stream(1, 1).normal(200_000)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1.0) < 0.01


@settings(max_examples=30, deadline=None)
@given(seed=u64, p=st.integers(1, 60), data=st.data())
def test_subset_is_partial_fisher_yates(seed, p, data):
    K = data.draw(st.integers(0, p))
    u = Stream(seed, 1).uniform(K)
    perm = list(range(p))
    for i in range(K):
        j = i + int(u[i] * (p - i))
        perm[i], perm[j] = perm[j], perm[i]
    got = Stream(seed, 1).subset(p, K)
    assert got.tolist() == sorted(perm[:K])
    assert len(set(got.tolist())) == K


def test_derive_seed_reference():
    for master, idx in [(0, 0), (7, 3), (M64, 12345)]:
        expect = philox4x64_10([idx + 1, 0, 0, 0], [master, 0x9E3779B97F4A7C15])[0]
        assert derive_seed(master, idx) == expect
    seeds = {derive_seed(99, i) for i in range(1000)}
    assert len(seeds) == 1000


def test_ar1_rho_zero_is_iid_normalized_gaussian():
    X = gen_design_ar1(40, 6, 0.0, seed=3)
    Z = Stream(3, 0).normal(240).reshape(6, 40).T
    np.testing.assert_allclose(X, Z * (np.sqrt(40) / np.linalg.norm(Z, axis=0)), rtol=1e-14)


def test_ar1_correlation_structure():
    X = gen_design_ar1(20000, 4, 0.6, seed=1, normalize=False)
    C = np.corrcoef(X, rowvar=False)
    for lag in (1, 2, 3):
        assert np.mean(np.diag(C, lag)) == pytest.approx(0.6 ** lag, abs=0.02)
    assert np.var(X, axis=0) == pytest.approx(np.ones(4), abs=0.05)


def test_neighbor_design():
    n, p, rho = 30, 8, 0.3
    X = gen_design_neighbor(n, p, rho, seed=5)
    np.testing.assert_allclose(np.linalg.norm(X, axis=0), np.sqrt(n), rtol=1e-13)
    Z = Stream(5, 0).normal(n * p).reshape(p, n).T
    Xbar = Z * (np.sqrt(n) / np.linalg.norm(Z, axis=0))
    ref = Xbar.copy()
    for j in range(1, p - 1):
        ref[:, j] = Xbar[:, j] + rho * (Xbar[:, j - 1] + Xbar[:, j + 1])
    ref *= np.sqrt(n) / np.linalg.norm(ref, axis=0)
    np.testing.assert_allclose(X, ref, rtol=1e-13)
    np.testing.assert_allclose(X[:, 0], Xbar[:, 0], rtol=1e-13)
    with pytest.raises(ValueError):
        gen_design_neighbor(5, 2, 0.1, 0)


def test_head_mode_magnitudes():
    spec = SimSpec(n=500, p=1000, K=50, sigma=0.01, R=10.0, coef_mode="head", seed=8)
    m = 0.01 * math.sqrt(2 * math.log(1000) / 500)
    assert m == pytest.approx(1.6622581362691e-3, rel=1e-12)
    beta = gen_coefficients(spec)
    mags = np.abs(beta[beta != 0])
    assert mags.size == 50
    assert mags.min() >= m and mags.max() <= 10 * m
    with pytest.raises(DegenerateScale):
        gen_coefficients(SimSpec(n=10, p=20, K=2, sigma=0.0, coef_mode="head"))


def test_random_mode_magnitudes_and_signs():
    beta = gen_coefficients(SimSpec(n=10, p=5000, K=2000, R=3.0, coef_mode="random", seed=1))
    mags = np.abs(beta[beta != 0])
    assert mags.size == 2000 and mags.min() >= 1.0 and mags.max() <= 3.0
    assert abs(np.mean(beta[beta != 0] > 0) - 0.5) < 0.05


def test_R_one_gives_constant_magnitude():
    beta = gen_coefficients(SimSpec(n=10, p=50, K=5, R=1.0, coef_mode="random", seed=1))
    np.testing.assert_array_equal(np.abs(beta[beta != 0]), 1.0)


def test_simspec_validation():
    bad = [dict(K=20, p=10), dict(sigma=-1.0), dict(R=0.5), dict(design="x"),
           dict(coef_mode="x"), dict(rho=1.0), dict(design="ar1", rho=-1.0), dict(seed=-1)]
    for kw in bad:
        args = dict(n=10, p=10, K=2) | kw
        with pytest.raises(ValueError):
            SimSpec(**args)


def test_simulate_deterministic_and_consistent():
    spec = SimSpec(n=50, p=80, K=4, sigma=0.2, rho=0.2, seed=123)
    a, b = simulate(spec), simulate(spec)
    for name in ("X", "y", "beta_star", "support", "eta"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_allclose(a.y, a.X @ a.beta_star + a.eta, rtol=0, atol=0)
    np.testing.assert_array_equal(gen_response(a.X, a.beta_star, 0.2, 123), a.y)
    assert a.data.sigma_hint == 0.2
    c = simulate(spec.with_seed(124))
    assert not np.array_equal(a.X, c.X)
