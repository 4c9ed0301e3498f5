import numpy as np
import pytest

from sdar.model import RegressionData


def orthogonal_data(n, beta_star, sigma=0.0, seed=0):
    """Identity-type design ``sqrt(n) I`` (columns of norm sqrt(n)), ``y = X beta*``."""
    X = np.sqrt(n) * np.eye(n)
    y = X @ np.asarray(beta_star, dtype=float)
    if sigma:
        y = y + sigma * np.random.default_rng(seed).standard_normal(n)
    return RegressionData(X, y)


def random_design(n, p, rng):
    X = rng.standard_normal((n, p))
    return X * (np.sqrt(n) / np.linalg.norm(X, axis=0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
