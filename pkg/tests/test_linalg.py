import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdar.errors import CGBreakdown, DimensionMismatch, NonFinite, ZeroColumn
from sdar.linalg import CgSettings, cg_solve, correlation, default_cg_iters, normalize_columns


@pytest.mark.parametrize("p,T,expected", [
    (1000, 49, 10),     # floor(1000/98) = 10
    (1000, 3, 166),
    (5000, 40, 62),
    (50000, 1, 500),    # clamped above
    (20, 10, 10),       # clamped below
])
def test_default_cg_iters(p, T, expected):
    assert default_cg_iters(p, T) == expected


def test_cg_settings_validation():
    with pytest.raises(ValueError):
        CgSettings(max_iters=0)
    with pytest.raises(ValueError):
        CgSettings(rel_tol=0.0)
    assert CgSettings(max_iters=7).resolve(1000, 3) == 7
    assert CgSettings().resolve(1000, 3) == 166


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), p=st.integers(1, 12), seed=st.integers(0, 2**32 - 1),
       log_scale=st.floats(-3, 3))
def test_normalize_columns_norms_and_scale(n, p, seed, log_scale):
    X = np.random.default_rng(seed).standard_normal((n, p)) * 10.0 ** log_scale
    Xn, scale = normalize_columns(X)
    np.testing.assert_allclose(np.linalg.norm(Xn, axis=0), np.sqrt(n), rtol=1e-12)
    np.testing.assert_allclose(Xn, X * scale, rtol=0, atol=0)
    # normalizing twice is a no-op up to round-off
    Xnn, scale2 = normalize_columns(Xn)
    np.testing.assert_allclose(Xnn, Xn, rtol=1e-13)
    np.testing.assert_allclose(scale2, 1.0, rtol=1e-13)


def test_normalize_columns_errors():
    X = np.ones((4, 3))
    X[:, 1] = 0.0
    with pytest.raises(ZeroColumn) as exc:
        normalize_columns(X)
    assert exc.value.j == 1
    X[:, 1] = 1.0
    X[2, 2] = np.nan
    with pytest.raises(NonFinite):
        normalize_columns(X)
    with pytest.raises(DimensionMismatch):
        normalize_columns(np.ones(4))


def test_normalize_does_not_mutate():
    X = np.arange(1.0, 7.0).reshape(3, 2)
    before = X.copy()
    normalize_columns(X)
    np.testing.assert_array_equal(X, before)


def test_correlation():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(correlation(X, np.array([1.0, -1.0])), [-1.0, -1.0])
    with pytest.raises(DimensionMismatch):
        correlation(X, np.ones(3))


@settings(max_examples=60, deadline=None)
@given(a=st.integers(1, 50), extra=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_cg_matches_dense_solve(a, extra, seed):
    rng = np.random.default_rng(seed)
    n = a + extra
    X = rng.standard_normal((n, a))
    X *= np.sqrt(n) / np.linalg.norm(X, axis=0)
    y = rng.standard_normal(n)
    G = X.T @ X
    if np.linalg.cond(G) > 1e8:
        return
    ref = np.linalg.solve(G, X.T @ y)
    x, info = cg_solve(X, y, cfg=CgSettings(max_iters=10 * a + 10))
    assert info.converged
    assert np.max(np.abs(x - ref)) <= 1e-8 * max(1.0, np.max(np.abs(ref)))
    assert info.residual_norm <= 1e-10 * info.rhs_norm


def test_cg_warm_start_at_solution_takes_no_steps(rng):
    X = rng.standard_normal((20, 5))
    y = rng.standard_normal(20)
    exact = np.linalg.lstsq(X, y, rcond=None)[0]
    x, info = cg_solve(X, y, x0=exact)
    assert info.iterations == 0 and info.converged
    np.testing.assert_array_equal(x, exact)


def test_cg_respects_budget(rng):
    X = rng.standard_normal((60, 30)) @ np.diag(np.logspace(0, 3, 30))
    y = rng.standard_normal(60)
    _, info = cg_solve(X, y, cfg=CgSettings(max_iters=2))
    assert info.iterations == 2
    assert not info.converged


def test_cg_exact_in_at_most_a_steps_for_orthogonal(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    y = rng.standard_normal(10)
    x, info = cg_solve(Q, y)
    assert info.iterations == 1
    np.testing.assert_allclose(x, Q.T @ y, atol=1e-14)


def test_cg_empty_active_set():
    x, info = cg_solve(np.zeros((3, 0)), np.ones(3))
    assert x.shape == (0,) and info.converged and info.iterations == 0


def test_cg_breakdown():
    # curvature underflows to zero on a column of size 1e-160
    with pytest.raises(CGBreakdown):
        cg_solve(np.array([[1e-160], [1e-160]]), np.array([1.0, 1.0]))


def test_cg_dimension_checks():
    with pytest.raises(DimensionMismatch):
        cg_solve(np.ones((3, 2)), np.ones(4))
    with pytest.raises(DimensionMismatch):
        cg_solve(np.ones((3, 2)), np.ones(3), x0=np.zeros(3))
