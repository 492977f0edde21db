"""GaussianNB and KNN against hand/brute-force oracles, plus the
contracts every family shares (probability rows, determinism,
serialization)."""

import numpy as np
import pytest

from fusevote.classifiers import (
    ClassifierSpec,
    FAMILIES,
    fit,
    gnb_fit,
    knn_fit,
    load_model,
    save_model,
)
from fusevote.data import LabeledDataset
from fusevote.errors import ConfigError, ShapeError

from conftest import make_blobs


def one_dim(values, labels, tag="1d"):
    x = np.asarray(values, dtype=np.float64).reshape(-1, 1)
    return LabeledDataset(x, labels, int(max(labels)) + 1, tag)


def gaussian_posterior_oracle(model, x):
    """Direct evaluation of prior x product-of-normal-densities."""
    out = np.zeros((x.shape[0], model.class_count))
    for c in range(model.class_count):
        dens = np.ones(x.shape[0])
        for f in range(x.shape[1]):
            var = model.variances[c, f]
            dens *= np.exp(-((x[:, f] - model.means[c, f]) ** 2) / (2 * var)) / np.sqrt(
                2 * np.pi * var)
        out[:, c] = model.priors[c] * dens
    return out / out.sum(axis=1, keepdims=True)


class TestGaussianNB:
    def test_hand_computed_posterior(self):
        ds = one_dim([0.0, 2.0, 10.0, 12.0], [0, 0, 1, 1])
        model = gnb_fit(ds, ClassifierSpec("GaussianNB"))
        proba = model.predict_proba(np.array([[1.0]]))
        assert proba[0, 0] > 0.99

    def test_symmetric_midpoint_is_even_money(self):
        ds = one_dim([-3.0, -1.0, 1.0, 3.0], [0, 0, 1, 1])
        model = gnb_fit(ds, ClassifierSpec("GaussianNB"))
        proba = model.predict_proba(np.array([[0.0]]))
        assert proba[0, 0] == pytest.approx(0.5, abs=1e-9)

    def test_priors_override_used(self):
        ds = one_dim([-3.0, -1.0, 1.0, 3.0], [0, 0, 1, 1])
        model = gnb_fit(ds, ClassifierSpec("GaussianNB", {"priors": (0.3, 0.7)}))
        np.testing.assert_array_equal(model.priors, [0.3, 0.7])
        proba = model.predict_proba(np.array([[0.0]]))
        assert proba[0, 1] == pytest.approx(0.7, abs=1e-9)

    def test_priors_length_checked(self):
        tri = make_blobs(5, [(-2.0,), (0.0,), (2.0,)], scale=0.1, seed=0)
        with pytest.raises(ConfigError):
            gnb_fit(tri, ClassifierSpec("GaussianNB", {"priors": (0.5, 0.5)}))

    def test_variance_smoothing_applied(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(20, 3)) * np.array([1.0, 5.0, 0.2])
        y = rng.permutation([0, 1] * 10)
        ds = LabeledDataset(x, y, 2, "vs")
        vs = 1e-3
        model = gnb_fit(ds, ClassifierSpec("GaussianNB", {"var_smoothing": vs}))
        epsilon = vs * x.var(axis=0).max()
        for c in (0, 1):
            raw = x[y == c].var(axis=0)
            np.testing.assert_allclose(model.variances[c], raw + epsilon, rtol=1e-12)

    def test_predict_matches_density_oracle(self):
        rng = np.random.default_rng(5)
        ds = LabeledDataset(rng.normal(size=(40, 3)) + rng.integers(0, 2, 40)[:, None] * 2,
                            rng.permutation([0, 1] * 20), 2, "g")
        model = gnb_fit(ds, ClassifierSpec("GaussianNB"))
        queries = rng.normal(size=(25, 3))
        oracle = gaussian_posterior_oracle(model, queries)
        np.testing.assert_allclose(model.predict_proba(queries), oracle, atol=1e-9)
        np.testing.assert_array_equal(model.predict(queries), np.argmax(oracle, axis=1))


def knn_oracle(train_x, train_y, query, k, metric, p, weighted, n_classes):
    """Plain-loop reimplementation with the same tie conventions."""
    dist = []
    for row in train_x:
        if metric == "manhattan" or (metric == "minkowski" and p == 1):
            dist.append(np.abs(row - query).sum())
        elif metric == "minkowski" and p != 2:
            dist.append((np.abs(row - query) ** p).sum() ** (1 / p))
        else:
            dist.append(np.sqrt(((row - query) ** 2).sum()))
    order = sorted(range(len(dist)), key=lambda i: (dist[i], i))[:k]
    votes = [0.0] * n_classes
    if weighted and any(dist[i] == 0 for i in order):
        for i in order:
            if dist[i] == 0:
                votes[train_y[i]] += 1.0
    else:
        for i in order:
            votes[train_y[i]] += 1.0 / dist[i] if weighted else 1.0
    return int(np.argmax(votes))


class TestKnn:
    def test_k1_returns_nearest_label(self):
        ds = one_dim([0.0, 10.0], [0, 1])
        model = knn_fit(ds, ClassifierSpec("KNN", {"n_neighbors": 1}))
        np.testing.assert_array_equal(model.predict(np.array([[1.0], [9.0]])), [0, 1])

    @pytest.mark.parametrize("metric,p", [("euclidean", 2), ("manhattan", 1),
                                          ("minkowski", 1), ("minkowski", 2),
                                          ("minkowski", 3)])
    @pytest.mark.parametrize("weights", ["uniform", "distance"])
    def test_matches_brute_force_oracle(self, metric, p, weights):
        rng = np.random.default_rng(42)
        train_x = rng.normal(size=(30, 4))
        train_y = rng.integers(0, 3, size=30)
        train_y[:3] = [0, 1, 2]
        ds = LabeledDataset(train_x, train_y, 3, "knn")
        model = knn_fit(ds, ClassifierSpec(
            "KNN", {"n_neighbors": 5, "metric": metric, "p": p, "weights": weights}))
        queries = rng.normal(size=(20, 4))
        got = model.predict(queries)
        for q in range(20):
            expected = knn_oracle(train_x, train_y, queries[q], 5, metric, p,
                                  weights == "distance", 3)
            assert got[q] == expected

    def test_vote_tie_prefers_lower_class(self):
        ds = one_dim([0.0, 2.0], [1, 0])
        model = knn_fit(ds, ClassifierSpec("KNN", {"n_neighbors": 2}))
        assert model.predict(np.array([[1.0]]))[0] == 0

    def test_exact_hit_short_circuits_distance_weights(self):
        ds = one_dim([0.0, 0.1, 0.2], [1, 0, 0])
        model = knn_fit(ds, ClassifierSpec(
            "KNN", {"n_neighbors": 3, "weights": "distance"}))
        assert model.predict(np.array([[0.0]]))[0] == 1

    def test_k_exceeding_rows_rejected(self):
        ds = one_dim([0.0, 1.0], [0, 1])
        with pytest.raises(ConfigError):
            knn_fit(ds, ClassifierSpec("KNN", {"n_neighbors": 3}))

    def test_inert_plumbing_params_change_nothing(self):
        rng = np.random.default_rng(1)
        ds = LabeledDataset(rng.normal(size=(20, 3)),
                            rng.permutation([0, 1] * 10), 2, "knn")
        queries = rng.normal(size=(10, 3))
        base = knn_fit(ds, ClassifierSpec("KNN", {"n_neighbors": 3}))
        for algorithm in ("auto", "ball_tree", "kd_tree", "brute"):
            alt = knn_fit(ds, ClassifierSpec(
                "KNN", {"n_neighbors": 3, "algorithm": algorithm,
                        "leaf_size": 10, "n_jobs": -1}))
            np.testing.assert_array_equal(alt.predict(queries), base.predict(queries))


QUICK_PARAMS = {
    "GBT": {"n_estimators": 5, "max_depth": 3, "learning_rate": 0.1},
    "MLP": {"hidden_layer_sizes": (10,), "max_iter": 60},
    "GaussianNB": {},
    "AdaBoost": {"n_estimators": 10},
    "KNN": {"n_neighbors": 3},
    "RandomForest": {"n_estimators": 5},
    "SVM-linear": {"C": 10.0},
    "SVM-sigmoid": {"C": 1.0, "coef0": 0.0},
    "SVM-RBF": {"C": 10.0, "gamma": "scale"},
}


@pytest.fixture(scope="module")
def three_class_blobs():
    return make_blobs(12, [(-4.0, 0.0), (4.0, 0.0), (0.0, 5.0)], scale=0.6,
                      seed=8, tag="tri")


@pytest.mark.parametrize("family", FAMILIES)
class TestSharedContract:
    def test_proba_rows_sum_to_one_and_match_predict(self, family, three_class_blobs):
        model = fit(three_class_blobs, ClassifierSpec(family, QUICK_PARAMS[family]))
        proba = model.predict_proba(three_class_blobs.features)
        assert proba.shape == (three_class_blobs.rows, 3)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_array_equal(model.predict(three_class_blobs.features),
                                      np.argmax(proba, axis=1))

    def test_refit_is_bitwise_reproducible(self, family, three_class_blobs):
        spec = ClassifierSpec(family, QUICK_PARAMS[family], seed=21)
        a = fit(three_class_blobs, spec)
        b = fit(three_class_blobs, spec)
        np.testing.assert_array_equal(a.predict_proba(three_class_blobs.features),
                                      b.predict_proba(three_class_blobs.features))

    def test_serialization_round_trip(self, family, three_class_blobs, tmp_path):
        model = fit(three_class_blobs, ClassifierSpec(family, QUICK_PARAMS[family]))
        path = save_model(model, tmp_path / "model.bin")
        back = load_model(path)
        np.testing.assert_array_equal(back.predict_proba(three_class_blobs.features),
                                      model.predict_proba(three_class_blobs.features))
        assert back.spec.family == family

    def test_feature_width_checked(self, family, three_class_blobs):
        model = fit(three_class_blobs, ClassifierSpec(family, QUICK_PARAMS[family]))
        with pytest.raises(ShapeError):
            model.predict(np.zeros((2, 7)))

    def test_training_point_smoke(self, family, three_class_blobs):
        model = fit(three_class_blobs, ClassifierSpec(family, QUICK_PARAMS[family]))
        proba = model.predict_proba(three_class_blobs.features)
        confident = int(np.argmax(proba.max(axis=1)))
        assert model.predict(three_class_blobs.features[confident:confident + 1])[0] \
            == np.argmax(proba[confident])


def test_unknown_hyperparameter_rejected():
    with pytest.raises(ConfigError):
        ClassifierSpec("KNN", {"mystery_knob": 3})


def test_wrong_typed_hyperparameter_rejected():
    with pytest.raises(ConfigError):
        ClassifierSpec("KNN", {"n_neighbors": "three"})
    with pytest.raises(ConfigError):
        ClassifierSpec("GBT", {"subsample": 1.5})
