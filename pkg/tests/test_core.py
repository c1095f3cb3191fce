import numpy as np
import pytest

from ccakit import (
    CcaModel,
    Dataset,
    cca_fit,
    generate,
    project,
    redundancy,
    structure_correlations,
    SynthSpec,
)
from ccakit.core import apply_sign_convention, paired_correlations
from ccakit.errors import (
    ConditioningError,
    DataError,
    DegeneracyError,
    DimensionError,
    SchemaError,
)

from conftest import angle_grid_first_correlation, random_design, zscore_matrix


def planted(n, p, q, rho, seed, rotate=True):
    X, Y, truth = generate(SynthSpec(n=n, p=p, q=q, rho=rho, rotate=rotate, seed=seed))
    return zscore_matrix(X.values), zscore_matrix(Y.values), truth


class TestCcaFit:
    def test_single_pair_perfect_line(self):
        X = zscore_matrix(np.array([[1.0], [2.0], [3.0], [4.0]]))
        Y = zscore_matrix(np.array([[2.0], [4.0], [6.0], [8.0]]))
        model = cca_fit(X, Y)
        assert model.k == 1
        assert model.correlations[0] == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelated_pair_sign_lands_on_y(self):
        X = zscore_matrix(np.array([[1.0], [2.0], [3.0], [4.0]]))
        Y = zscore_matrix(np.array([[8.0], [6.0], [4.0], [2.0]]))
        model = cca_fit(X, Y)
        assert model.correlations[0] == pytest.approx(1.0, abs=1e-12)
        assert model.x_weights[0, 0] > 0
        assert model.y_weights[0, 0] < 0

    def test_matches_angle_grid_oracle(self, rng):
        X = random_design(rng, 50, 2)
        Y = random_design(rng, 50, 2)
        model = cca_fit(X, Y)
        oracle = angle_grid_first_correlation(X, Y)
        assert model.correlations[0] == pytest.approx(oracle, abs=1e-3)

    def test_recovers_planted_mode(self):
        X, Y, truth = planted(5000, 6, 5, (0.8,), seed=3)
        model = cca_fit(X, Y)
        assert abs(model.correlations[0] - 0.8) < 0.05

    def test_degeneracy_error_names_rule_and_remedies(self, rng):
        X = rng.standard_normal((50, 60))
        Y = rng.standard_normal((50, 5))
        with pytest.raises(DegeneracyError, match=r"n > max\(p, q\)") as err:
            cca_fit(X, Y)
        for remedy in ("--pca", "--ridge", "sparse"):
            assert remedy in str(err.value)

    def test_ridge_lifts_degeneracy(self, rng):
        X = zscore_matrix(rng.standard_normal((50, 60)))
        Y = zscore_matrix(rng.standard_normal((50, 5)))
        model = cca_fit(X, Y, ridge=(1e-3, 1e-3))
        assert model.variant == "ridge"
        assert np.all(np.isfinite(model.correlations))

    def test_ridge_zero_equals_classical(self, rng):
        X = random_design(rng, 100, 4)
        Y = random_design(rng, 100, 3)
        classical = cca_fit(X, Y)
        ridge0 = cca_fit(X, Y, ridge=(0.0, 0.0))
        assert np.max(np.abs(classical.correlations - ridge0.correlations)) < 1e-10
        assert np.max(np.abs(classical.x_weights - ridge0.x_weights)) < 1e-10

    def test_conditioning_error_on_duplicate_columns(self, rng):
        col = rng.standard_normal(50)
        X = zscore_matrix(np.column_stack([col, col, rng.standard_normal(50)]))
        Y = random_design(rng, 50, 2)
        with pytest.raises(ConditioningError):
            cca_fit(X, Y)

    def test_k_out_of_range(self, rng):
        X = random_design(rng, 30, 3)
        Y = random_design(rng, 30, 2)
        with pytest.raises(DimensionError):
            cca_fit(X, Y, k=3)

    def test_correlations_clipped_and_sorted(self, rng):
        X = random_design(rng, 60, 4)
        Y = random_design(rng, 60, 4)
        model = cca_fit(X, Y)
        assert np.all(model.correlations >= 0) and np.all(model.correlations <= 1)
        assert np.all(np.diff(model.correlations) <= 0)

    def test_row_count_mismatch(self, rng):
        with pytest.raises(DataError):
            cca_fit(rng.standard_normal((10, 2)), rng.standard_normal((11, 2)))


class TestInvariants:
    def test_symmetry(self, rng):
        for _ in range(10):
            n = int(rng.integers(30, 120))
            p = int(rng.integers(2, 6))
            q = int(rng.integers(2, 6))
            X = random_design(rng, n, p)
            Y = random_design(rng, n, q)
            ab = cca_fit(X, Y)
            ba = cca_fit(Y, X)
            assert np.max(np.abs(ab.correlations - ba.correlations)) < 1e-10
            # weights swap sides once each pair is renormalized to the
            # convention of its own x side
            xw, yw = apply_sign_convention(ba.y_weights, ba.x_weights)
            assert np.max(np.abs(ab.x_weights - xw)) < 1e-6
            assert np.max(np.abs(ab.y_weights - yw)) < 1e-6

    def test_variates_orthogonal(self, rng):
        X = random_design(rng, 200, 5)
        Y = random_design(rng, 200, 5)
        model = cca_fit(X, Y)
        var = project(model, X, Y)
        cu = np.corrcoef(var.U, rowvar=False)
        cv = np.corrcoef(var.V, rowvar=False)
        assert np.max(np.abs(cu - np.eye(5))) < 1e-6
        assert np.max(np.abs(cv - np.eye(5))) < 1e-6
        cuv = zscore_matrix(var.U).T @ zscore_matrix(var.V) / 199
        off = cuv - np.diag(np.diag(cuv))
        assert np.max(np.abs(off)) < 1e-6

    def test_scale_invariance(self, rng):
        Xr = rng.standard_normal((80, 4))
        Yr = rng.standard_normal((80, 3))
        base = cca_fit(zscore_matrix(Xr), zscore_matrix(Yr))
        scales_x = 10.0 ** rng.uniform(-3, 3, size=4)
        scales_y = 10.0 ** rng.uniform(-3, 3, size=3)
        scaled = cca_fit(zscore_matrix(Xr * scales_x), zscore_matrix(Yr * scales_y))
        assert np.max(np.abs(base.correlations - scaled.correlations)) < 1e-8

    def test_invariance_under_invertible_maps(self, rng):
        X = random_design(rng, 100, 4)
        Y = random_design(rng, 100, 3)
        base = cca_fit(X, Y)
        A = rng.standard_normal((4, 4)) + 2.0 * np.eye(4)  # well-conditioned
        mapped = cca_fit(X @ A, Y)
        assert np.max(np.abs(base.correlations - mapped.correlations)) < 1e-6

    def test_first_k_consistency(self, rng):
        X = random_design(rng, 150, 8)
        Y = random_design(rng, 150, 7)
        small = cca_fit(X, Y, k=5)
        full = cca_fit(X, Y, k=7)
        assert np.max(np.abs(small.correlations - full.correlations[:5])) < 1e-12
        assert np.max(np.abs(small.x_weights - full.x_weights[:, :5])) < 1e-12
        assert np.max(np.abs(small.y_weights - full.y_weights[:, :5])) < 1e-12


class TestProject:
    def test_training_projection_reproduces_correlations(self, rng):
        X = random_design(rng, 90, 4)
        Y = random_design(rng, 90, 4)
        model = cca_fit(X, Y)
        var = project(model, X, Y)
        reproduced = paired_correlations(var.U, var.V)
        assert np.max(np.abs(reproduced - model.correlations)) < 1e-10

    def test_duplicated_rows_identical_variates(self, rng):
        X = random_design(rng, 40, 3)
        Y = random_design(rng, 40, 3)
        model = cca_fit(X, Y)
        var = project(model, X, Y)
        dup = project(model, np.vstack([X, X]), np.vstack([Y, Y]))
        assert np.array_equal(dup.U[:40], var.U)
        assert np.array_equal(dup.U[40:], var.U)

    def test_heldout_rows_near_planted_correlation(self):
        X, Y, _ = planted(3000, 5, 5, (0.8,), seed=12)
        model = cca_fit(X[:2500], Y[:2500])
        var = project(model, X[2500:], Y[2500:])
        r1 = paired_correlations(var.U, var.V)[0]
        assert abs(r1 - 0.8) < 0.1

    def test_name_mismatch(self, rng):
        X = Dataset(("a", "b"), rng.standard_normal((30, 2)))
        Y = Dataset(("c", "d"), rng.standard_normal((30, 2)))
        model = cca_fit(X, Y)
        with pytest.raises(SchemaError):
            project(model, Y, X)


class TestLoadings:
    def test_single_column_same_set_loading_is_unit(self, rng):
        X = random_design(rng, 60, 1)
        Y = random_design(rng, 60, 3)
        model = cca_fit(X, Y)
        load = structure_correlations(model, X, Y)
        assert abs(abs(load.x_same[0, 0]) - 1.0) < 1e-10

    def test_noise_column_loading_small(self):
        X, Y, _ = planted(2000, 6, 6, (0.8,), seed=4, rotate=False)
        model = cca_fit(X, Y)
        load = structure_correlations(model, X, Y)
        assert abs(load.x_same[5, 0]) < 0.15  # pure-noise column, mode 1

    def test_duplicated_signal_columns_equal_loadings(self):
        rng = np.random.default_rng(9)
        sig = rng.standard_normal(500)
        X = zscore_matrix(np.column_stack([sig, sig + 1e-6 * rng.standard_normal(500),
                                           rng.standard_normal(500)]))
        Y = zscore_matrix(np.column_stack([sig + rng.standard_normal(500),
                                           rng.standard_normal(500)]))
        model = cca_fit(X, Y, ridge=(1e-6, 1e-6))
        load = structure_correlations(model, X, Y)
        assert np.max(np.abs(load.x_same[0] - load.x_same[1])) < 1e-3


class TestRedundancy:
    def test_perfect_pair_full_redundancy(self):
        X = zscore_matrix(np.arange(1.0, 9.0)[:, None])
        Y = zscore_matrix((2.0 * np.arange(1.0, 9.0))[:, None])
        model = cca_fit(X, Y)
        red = redundancy(model, X, Y)
        assert red.x_explained[0] == pytest.approx(1.0, abs=1e-10)
        assert red.y_explained[0] == pytest.approx(1.0, abs=1e-10)

    def test_independent_sets_near_zero(self):
        rng = np.random.default_rng(21)
        X = random_design(rng, 2000, 5)
        Y = random_design(rng, 2000, 5)
        model = cca_fit(X, Y)
        red = redundancy(model, X, Y)
        assert red.mean[0] < 0.05

    def test_planted_modes_ordered(self):
        X, Y, _ = planted(3000, 6, 6, (0.8, 0.5), seed=8)
        model = cca_fit(X, Y)
        red = redundancy(model, X, Y)
        assert red.mean[0] > red.mean[2]


class TestSerialization:
    def test_json_round_trip(self, rng):
        X = random_design(rng, 50, 3)
        Y = random_design(rng, 50, 2)
        model = cca_fit(X, Y)
        back = CcaModel.from_json(model.to_json())
        assert back.x_names == model.x_names
        assert np.array_equal(back.x_weights, model.x_weights)
        assert np.array_equal(back.correlations, model.correlations)
        assert back.variant == model.variant
