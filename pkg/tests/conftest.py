import numpy as np
import pytest

from ccakit import Dataset, zscore_apply, zscore_fit


def standardized(ds: Dataset) -> Dataset:
    return zscore_apply(ds, zscore_fit(ds))


def zscore_matrix(M: np.ndarray) -> np.ndarray:
    return (M - M.mean(axis=0)) / M.std(axis=0, ddof=1)


def random_design(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    """Standardized Gaussian design matrix."""
    return zscore_matrix(rng.standard_normal((n, p)))


def angle_grid_first_correlation(X: np.ndarray, Y: np.ndarray,
                                 step: float = 0.001) -> float:
    """Brute-force first canonical correlation for p = q = 2.

    Parametrizes unit weight vectors by angles on a `step`-radian grid over
    [0, pi) (signs are absorbed by the absolute value) and maximizes the
    |Pearson correlation| of the resulting variate pair.  Independent of the
    SVD solver path on purpose.
    """
    assert X.shape[1] == 2 and Y.shape[1] == 2
    thx = np.arange(0.0, np.pi, step)
    thy = np.arange(0.0, np.pi, step)
    U = X @ np.vstack([np.cos(thx), np.sin(thx)])
    V = Y @ np.vstack([np.cos(thy), np.sin(thy)])
    U = U - U.mean(axis=0)
    V = V - V.mean(axis=0)
    U /= np.linalg.norm(U, axis=0)
    V /= np.linalg.norm(V, axis=0)
    return float(np.abs(U.T @ V).max())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
