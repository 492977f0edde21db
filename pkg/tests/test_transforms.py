import numpy as np
import pytest

from fusevote.data import LabeledDataset
from fusevote.errors import ConfigError, FitError, ShapeError
from fusevote.transforms import (
    MinMaxStats,
    PCAModel,
    SmoteConfig,
    minmax_apply,
    minmax_fit,
    pca_apply,
    pca_fit,
    smote_oversample,
    synth_sample,
)


class TestMinMax:
    def test_fit_single_column(self):
        stats = minmax_fit(np.array([[2.0], [4.0], [6.0]]))
        assert stats.y_min[0] == 2.0 and stats.y_max[0] == 6.0

    def test_fit_constant_column(self):
        stats = minmax_fit(np.array([[5.0], [5.0]]))
        assert stats.y_min[0] == stats.y_max[0] == 5.0

    def test_fit_matches_exhaustive_scan(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, 2))
        stats = minmax_fit(x)
        for col in range(2):
            lo, hi = x[0, col], x[0, col]
            for row in range(3):
                lo = min(lo, x[row, col])
                hi = max(hi, x[row, col])
            assert stats.y_min[col] == lo and stats.y_max[col] == hi

    def test_apply_scales_to_unit(self):
        stats = MinMaxStats([2.0], [6.0])
        out = minmax_apply(np.array([[2.0], [4.0], [6.0]]), stats)
        np.testing.assert_allclose(out[:, 0], [0.0, 0.5, 1.0])

    def test_constant_column_maps_to_zero(self):
        stats = minmax_fit(np.array([[5.0, 1.0], [5.0, 3.0]]))
        out = minmax_apply(np.array([[5.0, 2.0], [5.0, 1.0]]), stats)
        np.testing.assert_array_equal(out[:, 0], [0.0, 0.0])

    def test_out_of_range_not_clipped(self):
        stats = MinMaxStats([2.0], [6.0])
        out = minmax_apply(np.array([[8.0]]), stats)
        assert out[0, 0] == 1.5

    def test_train_extremes_exact(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(20, 5)) * rng.uniform(0.1, 9, size=5)
        out = minmax_apply(x, minmax_fit(x))
        np.testing.assert_array_equal(out.min(axis=0), np.zeros(5))
        np.testing.assert_array_equal(out.max(axis=0), np.ones(5))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            minmax_apply(np.ones((2, 3)), MinMaxStats([0.0], [1.0]))


class TestPCA:
    def test_diagonal_line_direction(self):
        rng = np.random.default_rng(1)
        t = rng.normal(size=400)
        x = np.column_stack([t, t]) + rng.normal(scale=1e-6, size=(400, 2))
        model = pca_fit(x)
        assert model.n_components == 1
        direction = model.components[0]
        target = np.array([1.0, 1.0]) / np.sqrt(2.0)
        angle = np.arccos(np.clip(abs(direction @ target), -1, 1))
        assert angle < 1e-3

    def test_isotropic_spectrum(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(10_000, 4))
        model = pca_fit(x)
        assert model.n_components == 2
        ev = model.explained_variance
        assert ev[0] / ev[1] < 1.15

    def test_one_dimensional(self):
        model = pca_fit(np.array([[1.0], [2.0], [4.0]]))
        assert model.n_components == 1
        assert model.components[0, 0] in (1.0, -1.0)

    def test_single_row_rejected(self):
        with pytest.raises(FitError):
            pca_fit(np.ones((1, 3)))

    def test_projected_mean_is_zero(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(12, 4))
        model = pca_fit(x)
        out = pca_apply(x.mean(axis=0, keepdims=True), model)
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_identity_basis_passthrough(self):
        x = np.array([[1.0, -2.0], [-1.0, 2.0], [3.0, 0.0], [-3.0, 0.0]])
        model = PCAModel(np.zeros(2), np.eye(2), np.ones(2))
        np.testing.assert_array_equal(pca_apply(x, model), x)

    def test_projection_matches_matrix_product(self):
        rng = np.random.default_rng(5)
        train = rng.normal(size=(5, 4))
        model = pca_fit(train)
        x = rng.normal(size=(3, 4))
        expected = (x - model.mean) @ model.components.T
        np.testing.assert_allclose(pca_apply(x, model), expected, atol=1e-10)

    def test_eigen_oracle_on_10x6(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(10, 6)) * np.array([3.0, 2.0, 1.5, 1.0, 0.5, 0.1])
        model = pca_fit(x)
        assert model.n_components == 3
        # independent route: dense eigendecomposition of the covariance
        centered = x - x.mean(axis=0)
        cov = centered.T @ centered / (x.shape[0] - 1)
        eigvals = np.sort(np.linalg.eigh(cov)[0])[::-1]
        np.testing.assert_allclose(model.explained_variance, eigvals[:3], atol=1e-8)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(7)
        model = pca_fit(rng.normal(size=(30, 8)))
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(model.n_components), atol=1e-8)

    def test_projection_is_contraction(self):
        rng = np.random.default_rng(8)
        train = rng.normal(size=(20, 6))
        model = pca_fit(train)
        x = rng.normal(size=(10, 6))
        proj = pca_apply(x, model)
        for i in range(10):
            for j in range(i + 1, 10):
                lhs = np.linalg.norm(proj[i] - proj[j])
                rhs = np.linalg.norm(x[i] - x[j])
                assert lhs <= rhs + 1e-9

    def test_refit_bitwise_identical(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(15, 5))
        a, b = pca_fit(x), pca_fit(x)
        np.testing.assert_array_equal(a.components, b.components)
        np.testing.assert_array_equal(a.explained_variance, b.explained_variance)


def brute_force_knn(members, i, k):
    dist = np.linalg.norm(members - members[i], axis=1)
    dist[i] = np.inf
    return np.argsort(dist, kind="stable")[:k]


def imbalanced_dataset(n_major=155, n_minor=98, d=3, seed=0):
    rng = np.random.default_rng(seed)
    x = np.vstack([
        rng.normal(0.0, 1.0, size=(n_major, d)),
        rng.normal(4.0, 1.0, size=(n_minor, d)),
    ])
    y = np.r_[np.zeros(n_major, int), np.ones(n_minor, int)]
    return LabeledDataset(x, y, 2, "imb")


class TestSmote:
    def test_midpoint_arithmetic(self):
        out = synth_sample(np.array([0.0, 0.0]), np.array([2.0, 2.0]), 0.5)
        np.testing.assert_array_equal(out, [1.0, 1.0])

    def test_balances_to_majority(self):
        ds = imbalanced_dataset()
        out = smote_oversample(ds, SmoteConfig(5, seed=1))
        np.testing.assert_array_equal(out.class_sizes(), [155, 155])
        # originals preserved verbatim, synthetics appended
        np.testing.assert_array_equal(out.features[:253], ds.features)
        np.testing.assert_array_equal(out.labels[:253], ds.labels)

    def test_balanced_input_unchanged(self):
        ds = imbalanced_dataset(40, 40)
        assert smote_oversample(ds, SmoteConfig(5, seed=0)) is ds

    def test_tiny_minority_rejected(self):
        ds = imbalanced_dataset(30, 4)
        with pytest.raises(ConfigError):
            smote_oversample(ds, SmoteConfig(5, seed=0))

    def test_synthetics_on_verified_segments(self):
        ds = imbalanced_dataset(60, 20, seed=3)
        cfg = SmoteConfig(5, seed=7)
        out = smote_oversample(ds, cfg)
        minority = ds.features[ds.labels == 1]
        synthetics = out.features[ds.rows:]
        for s in synthetics:
            best = np.inf
            for i in range(minority.shape[0]):
                for j in brute_force_knn(minority, i, cfg.k_neighbors):
                    seg = minority[j] - minority[i]
                    denom = seg @ seg
                    t = 0.0 if denom == 0 else np.clip((s - minority[i]) @ seg / denom, 0, 1)
                    best = min(best, np.linalg.norm(s - (minority[i] + t * seg)))
            assert best < 1e-10

    def test_seeded_determinism(self):
        ds = imbalanced_dataset(50, 20, seed=2)
        a = smote_oversample(ds, SmoteConfig(5, seed=11))
        b = smote_oversample(ds, SmoteConfig(5, seed=11))
        np.testing.assert_array_equal(a.features, b.features)
        c = smote_oversample(ds, SmoteConfig(5, seed=12))
        assert not np.array_equal(a.features, c.features)
