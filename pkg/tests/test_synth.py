import numpy as np
import pytest

from ccakit import SynthSpec, cca_fit, generate
from ccakit.errors import DataError, DimensionError
from ccakit.synth import random_orthogonal

from conftest import zscore_matrix


class TestSpecValidation:
    def test_rho_must_be_nonincreasing(self):
        with pytest.raises(DataError):
            SynthSpec(n=10, p=3, q=3, rho=(0.5, 0.8))

    def test_rho_bounds(self):
        with pytest.raises(DataError):
            SynthSpec(n=10, p=3, q=3, rho=(1.2,))

    def test_too_many_modes(self):
        with pytest.raises(DimensionError):
            SynthSpec(n=10, p=2, q=3, rho=(0.9, 0.8, 0.7))

    def test_support_disjointness(self):
        with pytest.raises(DataError):
            SynthSpec(n=10, p=5, q=5, rho=(0.8, 0.5),
                      sparse_support=(((0, 1), (0,)), ((1, 2), (1,))))


class TestGenerate:
    def test_shapes_and_completeness(self):
        X, Y, truth = generate(SynthSpec(n=50, p=7, q=4, rho=(0.9, 0.2), seed=1))
        assert X.values.shape == (50, 7)
        assert Y.values.shape == (50, 4)
        assert not X.has_missing() and not Y.has_missing()
        assert truth.x_weights.shape == (7, 2)

    def test_deterministic(self):
        spec = SynthSpec(n=30, p=4, q=4, rho=(0.7,), rotate=True, seed=5)
        X1, Y1, t1 = generate(spec)
        X2, Y2, t2 = generate(spec)
        assert np.array_equal(X1.values, X2.values)
        assert np.array_equal(Y1.values, Y2.values)
        assert np.array_equal(t1.x_weights, t2.x_weights)

    def test_perfect_mode_recovered_exactly(self):
        X, Y, _ = generate(SynthSpec(n=200, p=4, q=4, rho=(1.0,), seed=2))
        model = cca_fit(zscore_matrix(X.values), zscore_matrix(Y.values))
        assert abs(model.correlations[0] - 1.0) < 1e-8

    def test_monte_carlo_mean_near_planted(self):
        estimates = [
            cca_fit(*(zscore_matrix(d.values) for d in generate(
                SynthSpec(n=5000, p=4, q=4, rho=(0.8,), seed=s))[:2])).correlations[0]
            for s in range(50)
        ]
        assert abs(np.mean(estimates) - 0.8) < 0.03

    def test_truth_weights_give_planted_latents(self):
        spec = SynthSpec(n=400, p=6, q=5, rho=(0.8, 0.4), rotate=True, seed=3)
        X, Y, truth = generate(spec)
        ell, r = truth.variates(X.values, Y.values)
        # planted latent pair correlates near rho even after rotation
        for i, rho in enumerate(spec.rho):
            got = np.corrcoef(ell[:, i], r[:, i])[0, 1]
            assert abs(got - rho) < 0.15

    def test_rotation_preserves_fitted_correlations(self):
        plain = SynthSpec(n=4000, p=5, q=5, rho=(0.7, 0.3), rotate=False, seed=11)
        spun = SynthSpec(n=4000, p=5, q=5, rho=(0.7, 0.3), rotate=True, seed=11)
        fits = []
        for spec in (plain, spun):
            X, Y, _ = generate(spec)
            fits.append(cca_fit(zscore_matrix(X.values), zscore_matrix(Y.values)))
        assert np.max(np.abs(fits[0].correlations[:2] - fits[1].correlations[:2])) < 0.05

    def test_estimation_error_shrinks_with_n(self):
        errors = []
        for n in (500, 2000, 8000):
            errs = []
            for s in range(20):
                X, Y, _ = generate(SynthSpec(n=n, p=5, q=5, rho=(0.6,), seed=s))
                fit = cca_fit(zscore_matrix(X.values), zscore_matrix(Y.values))
                errs.append(abs(fit.correlations[0] - 0.6))
            errors.append(np.mean(errs))
        assert errors[0] > errors[1] > errors[2]

    def test_sparse_support_copies(self):
        spec = SynthSpec(n=100, p=8, q=8, rho=(0.9,),
                         sparse_support=(((1, 4), (2, 6)),), seed=7)
        X, Y, truth = generate(spec)
        assert np.array_equal(X.values[:, 1], X.values[:, 4])
        assert truth.left_support == ((1, 4),)
        assert truth.x_weights[1, 0] == 0.5


class TestRandomOrthogonal:
    def test_orthogonality(self):
        rng = np.random.default_rng(0)
        for dim in (2, 5, 9):
            Q = random_orthogonal(dim, rng)
            assert np.max(np.abs(Q @ Q.T - np.eye(dim))) < 1e-10
