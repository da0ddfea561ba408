import numpy as np
import pytest

from gearline.features.base import FeatureVector
from gearline.preprocessing import (
    PreprocessingError,
    apply_pca,
    apply_robust_scaler,
    fit_pca,
    fit_robust_scaler,
)


def column(values):
    return np.asarray(values, dtype=float)[:, None]


class TestRobustScaler:
    def test_five_point_quartiles(self):
        m = fit_robust_scaler(column([1, 3, 5, 7, 9]))
        assert m.medians[0] == 5.0
        assert m.half_iqrs[0] == 2.0

    @pytest.mark.parametrize("x, expected", [(3, -1.0), (7, 1.0), (5, 0.0), (11, 3.0)])
    def test_mapping(self, x, expected):
        m = fit_robust_scaler(column([1, 3, 5, 7, 9]))
        assert apply_robust_scaler(m, [x]).values[0] == expected

    def test_constant_column_maps_to_zero(self):
        X = np.column_stack([np.full(6, 4.2), np.arange(6.0)])
        m = fit_robust_scaler(X)
        assert m.half_iqrs[0] == 0.0
        assert apply_robust_scaler(m, [1e6, 2.0]).values[0] == 0.0

    def test_identical_columns(self):
        x = np.random.default_rng(1).normal(size=20)
        m = fit_robust_scaler(np.column_stack([x, x]))
        assert m.medians[0] == m.medians[1] and m.half_iqrs[0] == m.half_iqrs[1]

    def test_training_quartiles_to_unit(self):
        X = np.random.default_rng(2).lognormal(size=(37, 5))
        m = fit_robust_scaler(X)
        q1, q3 = np.percentile(X, [25, 75], axis=0)
        assert np.allclose(m.transform(q3) - m.transform(q1), 2.0, rtol=0, atol=1e-12)

    def test_symmetric_quartiles_to_unit(self):
        base = np.random.default_rng(2).normal(size=20)
        X = np.column_stack([np.concatenate([base, -base, [0.0]]), np.concatenate([3 * base, -3 * base, [0.0]]) + 4])
        m = fit_robust_scaler(X)
        q1, q3 = np.percentile(X, [25, 75], axis=0)
        assert np.array_equal(m.transform(q1), -np.ones(2))
        assert np.array_equal(m.transform(q3), np.ones(2))

    def test_names_carried(self):
        m = fit_robust_scaler(column([1, 3, 5, 7, 9]))
        out = apply_robust_scaler(m, FeatureVector(("les_ff_0",), [9.0]))
        assert out.names == ("les_ff_0",)

    def test_too_few_rows(self):
        with pytest.raises(PreprocessingError):
            fit_robust_scaler(column([1, 2, 3]))

    def test_dimension_mismatch(self):
        m = fit_robust_scaler(np.ones((5, 3)))
        with pytest.raises(PreprocessingError):
            apply_robust_scaler(m, [1.0, 2.0])

    def test_non_finite(self):
        with pytest.raises(PreprocessingError):
            fit_robust_scaler(column([1, 2, np.nan, 4, 5]))


class TestPca:
    def test_points_on_a_line(self):
        t = np.linspace(-3, 5, 40)
        X = np.column_stack([t, 2 * t + 1])
        m = fit_pca(X)
        assert m.n_components == 1
        assert m.explained_variance_fracs[0] == pytest.approx(1.0)

    def test_isotropic_keeps_three(self):
        X = np.random.default_rng(0).normal(size=(1000, 3))
        assert fit_pca(X, 0.90).n_components == 3

    def test_zero_target_keeps_one(self):
        X = np.random.default_rng(0).normal(size=(50, 4))
        assert fit_pca(X, 0.0).n_components == 1

    def test_orthonormal_and_variance(self):
        X = np.random.default_rng(3).normal(size=(80, 12)) @ np.random.default_rng(4).normal(size=(12, 12))
        m = fit_pca(X)
        gram = m.components @ m.components.T
        assert np.max(np.abs(gram - np.eye(m.n_components))) <= 1e-9
        assert m.explained_variance_fracs.sum() >= 0.90

    def test_sign_convention(self):
        X = np.random.default_rng(5).normal(size=(60, 6)) * np.arange(1, 7)
        m = fit_pca(X)
        for row in m.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_scores_decorrelated(self):
        X = np.random.default_rng(6).normal(size=(200, 5)) @ np.random.default_rng(7).normal(size=(5, 5))
        m = fit_pca(X, 1.0)
        Z = m.transform(X)
        cov = np.cov(Z, rowvar=False)
        assert np.max(np.abs(cov - np.diag(np.diag(cov)))) <= 1e-8

    def test_mean_maps_to_zero(self):
        X = np.random.default_rng(8).normal(size=(30, 4))
        m = fit_pca(X)
        assert np.allclose(apply_pca(m, m.mean).values, 0.0, atol=1e-12)

    def test_reconstruction_error_orthogonal(self):
        X = np.random.default_rng(9).normal(size=(40, 6))
        m = fit_pca(X, 0.5)
        x = np.random.default_rng(10).normal(size=6)
        recon = m.mean + m.components.T @ apply_pca(m, x).values
        assert np.allclose(m.components @ (x - recon), 0.0, atol=1e-12)

    def test_full_rank_is_rotation(self):
        X = np.random.default_rng(11).normal(size=(30, 3))
        m = fit_pca(X, 1.0)
        x = np.array([0.3, -1.2, 2.0])
        z = apply_pca(m, x).values
        assert np.allclose(m.mean + m.components.T @ z, x, atol=1e-12)

    def test_identical_rows(self):
        with pytest.raises(PreprocessingError):
            fit_pca(np.ones((5, 3)))

    def test_dimension_mismatch(self):
        m = fit_pca(np.random.default_rng(0).normal(size=(10, 3)))
        with pytest.raises(PreprocessingError):
            apply_pca(m, np.zeros(4))
