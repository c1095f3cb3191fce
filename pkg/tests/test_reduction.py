import numpy as np
import pytest

from ccakit import Dataset, pca_apply, pca_fit
from ccakit.errors import DataError, DimensionError, SchemaError


def make(values, names=None):
    values = np.asarray(values, float)
    names = names or tuple(f"c{i + 1}" for i in range(values.shape[1]))
    return Dataset(names, values)


class TestPcaFit:
    def test_identical_columns_single_component(self, rng):
        col = rng.standard_normal(50)
        ds = make(np.column_stack([col, col]))
        red = pca_fit(ds, n_components=1)
        assert red.n_components == 1
        assert red.explained_variance_ratio[0] == pytest.approx(1.0)

    def test_full_fraction_returns_rank(self, rng):
        base = rng.standard_normal((40, 3))
        ds = make(np.column_stack([base, base[:, 0] + base[:, 1]]))  # rank 3
        red = pca_fit(ds, variance_fraction=1.0)
        assert red.n_components == 3

    def test_three_factor_model_recovered_at_95pct(self):
        rng = np.random.default_rng(33)
        n, p = 500, 10
        factors = rng.standard_normal((n, 3)) @ (3.0 * rng.standard_normal((3, p)))
        noise = 0.3 * rng.standard_normal((n, p))
        red = pca_fit(make(factors + noise), variance_fraction=0.95)
        assert red.n_components == 3

    def test_orthonormal_components(self, rng):
        red = pca_fit(make(rng.standard_normal((60, 5))), n_components=5)
        gram = red.components.T @ red.components
        assert np.max(np.abs(gram - np.eye(5))) < 1e-8

    def test_variances_nonincreasing_and_ratio_bounded(self, rng):
        red = pca_fit(make(rng.standard_normal((60, 5))), n_components=5)
        assert np.all(np.diff(red.explained_variance) <= 1e-12)
        assert red.explained_variance_ratio.sum() <= 1.0 + 1e-12

    def test_component_count_bound(self, rng):
        with pytest.raises(DimensionError):
            pca_fit(make(rng.standard_normal((4, 10))), n_components=5)

    def test_exactly_one_target(self, rng):
        ds = make(rng.standard_normal((10, 2)))
        with pytest.raises(DataError):
            pca_fit(ds)
        with pytest.raises(DataError):
            pca_fit(ds, n_components=1, variance_fraction=0.5)

    def test_sign_deterministic(self, rng):
        values = rng.standard_normal((50, 4))
        r1 = pca_fit(make(values), n_components=4)
        r2 = pca_fit(make(values), n_components=4)
        assert np.array_equal(r1.components, r2.components)
        for j in range(4):
            k = np.argmax(np.abs(r1.components[:, j]))
            assert r1.components[k, j] > 0


class TestPcaApply:
    def test_scores_decorrelated(self, rng):
        ds = make(rng.standard_normal((80, 4)))
        red = pca_fit(ds, n_components=4)
        scores = pca_apply(ds, red).values
        cov = scores.T @ scores / 79
        assert np.max(np.abs(cov - np.diag(np.diag(cov)))) < 1e-8

    def test_full_rank_reconstruction(self, rng):
        ds = make(rng.standard_normal((30, 4)))
        red = pca_fit(ds, n_components=4)
        scores = pca_apply(ds, red).values
        recon = scores @ red.components.T + red.means
        assert np.max(np.abs(recon - ds.values)) < 1e-8

    def test_heldout_projection_finite(self):
        rng = np.random.default_rng(7)
        train = make(rng.standard_normal((100, 6)))
        red = pca_fit(train, variance_fraction=0.9)
        hold = make(rng.standard_normal((40, 6)))
        out = pca_apply(hold, red)
        assert np.all(np.isfinite(out.values))
        assert out.names == tuple(f"pc{i + 1}" for i in range(red.n_components))

    def test_name_mismatch(self, rng):
        red = pca_fit(make(rng.standard_normal((20, 2)), ("a", "b")), n_components=1)
        with pytest.raises(SchemaError):
            pca_apply(make(rng.standard_normal((20, 2)), ("a", "z")), red)
