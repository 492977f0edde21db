import numpy as np
import pytest

from fusevote.classifiers import (
    ClassifierSpec,
    adaboost_fit,
    cart_fit,
    gbt_fit,
    rf_fit,
    tree_predict,
)
from fusevote.classifiers.tree import gini
from fusevote.data import LabeledDataset

from conftest import make_blobs


def one_dim(values, labels, tag="1d"):
    x = np.asarray(values, dtype=np.float64).reshape(-1, 1)
    return LabeledDataset(x, labels, int(max(labels)) + 1, tag)


def oracle_best_gini_split(x, y, k):
    """Exhaustive scan over every midpoint of every feature."""
    n = x.shape[0]
    best = None
    for f in range(x.shape[1]):
        values = np.unique(x[:, f])
        for a, b in zip(values, values[1:]):
            threshold = (a + b) / 2
            left = y[x[:, f] <= threshold]
            right = y[x[:, f] > threshold]
            child = (
                left.size * gini(np.bincount(left, minlength=k) / left.size)
                + right.size * gini(np.bincount(right, minlength=k) / right.size)
            ) / n
            if best is None or child < best[0] - 1e-15:
                best = (child, f, threshold)
    return best


class TestCart:
    def test_pure_node_is_leaf(self):
        ds = one_dim([0.0, 1.0, 2.0], [0, 0, 0])
        root = cart_fit(ds.features, ds.labels, 1)
        assert root.is_leaf
        assert gini(root.distribution) == 0.0

    def test_root_threshold_between_classes(self):
        ds = one_dim([0.0, 1.0, 2.0, 3.0], [0, 0, 1, 1])
        root = cart_fit(ds.features, ds.labels, 2)
        assert not root.is_leaf
        assert 1.0 < root.threshold < 2.0
        oracle = oracle_best_gini_split(ds.features, ds.labels, 2)
        assert root.threshold == oracle[2]

    def test_matches_exhaustive_split_oracle(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(40, 3))
        y = (x[:, 1] > 0.2).astype(np.int64)
        root = cart_fit(x, y, 2)
        oracle = oracle_best_gini_split(x, y, 2)
        assert (root.feature, root.threshold) == (oracle[1], oracle[2])

    def test_depth_zero_majority_leaf(self):
        ds = one_dim([0.0, 1.0, 2.0], [0, 1, 1])
        root = cart_fit(ds.features, ds.labels, 2, max_depth=0)
        assert root.is_leaf
        assert np.argmax(root.distribution) == 1

    def test_weighted_majority_in_leaf(self):
        ds = one_dim([0.0, 1.0, 2.0], [0, 1, 1])
        root = cart_fit(ds.features, ds.labels, 2, max_depth=0,
                        sample_weight=np.array([10.0, 1.0, 1.0]))
        assert np.argmax(root.distribution) == 0

    def test_split_threshold_between_observed_values(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(30, 2))
        y = (x[:, 0] + x[:, 1] > 0).astype(np.int64)
        root = cart_fit(x, y, 2)

        def check(node, rows):
            if node.is_leaf:
                return
            col = x[rows, node.feature]
            below = col[col < node.threshold]
            above = col[col > node.threshold]
            assert below.size and above.size
            # the midpoint of the two values straddling the cut
            assert node.threshold == (below.max() + above.min()) / 2
            check(node.left, rows[col <= node.threshold])
            check(node.right, rows[col > node.threshold])

        check(root, np.arange(x.shape[0]))

    def test_entropy_criterion_runs(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(30, 2))
        y = (x[:, 0] > 0).astype(np.int64)
        root = cart_fit(x, y, 2, criterion="entropy")
        assert np.mean(tree_predict(root, x) == y) == 1.0


class TestRandomForest:
    def test_single_tree_memorizes(self):
        rng = np.random.default_rng(3)
        ds = LabeledDataset(rng.normal(size=(25, 4)),
                            rng.permutation([0, 1, 2, 0, 1] * 5), 3, "mem")
        model = rf_fit(ds, ClassifierSpec("RandomForest",
                                          {"n_estimators": 1, "bootstrap": False}))
        assert model.accuracy(ds) == 1.0

    def test_tree_count_matches_spec(self, separable_blobs):
        model = rf_fit(separable_blobs,
                       ClassifierSpec("RandomForest", {"n_estimators": 7}))
        assert len(model.trees) == 7

    def test_oob_score_in_unit_interval(self, separable_blobs):
        model = rf_fit(separable_blobs,
                       ClassifierSpec("RandomForest",
                                      {"n_estimators": 20, "bootstrap": True,
                                       "oob_score": True}))
        assert model.oob_score_ is not None
        assert 0.0 <= model.oob_score_ <= 1.0

    def test_no_bootstrap_means_no_oob(self, separable_blobs):
        model = rf_fit(separable_blobs,
                       ClassifierSpec("RandomForest",
                                      {"n_estimators": 3, "bootstrap": False,
                                       "oob_score": True}))
        assert model.oob_score_ is None

    def test_identical_trees_vote_unanimously(self, separable_blobs):
        spec = ClassifierSpec("RandomForest",
                              {"n_estimators": 5, "bootstrap": False,
                               "max_features": None})
        forest = rf_fit(separable_blobs, spec)
        single = rf_fit(separable_blobs,
                        ClassifierSpec("RandomForest",
                                       {"n_estimators": 1, "bootstrap": False,
                                        "max_features": None}))
        np.testing.assert_array_equal(
            forest.predict(separable_blobs.features),
            single.predict(separable_blobs.features),
        )

    def test_seeded_determinism(self, separable_blobs):
        spec = ClassifierSpec("RandomForest", {"n_estimators": 10}, seed=9)
        a = rf_fit(separable_blobs, spec)
        b = rf_fit(separable_blobs, spec)
        np.testing.assert_array_equal(a.predict(separable_blobs.features),
                                      b.predict(separable_blobs.features))

    def test_random_state_hyperparameter_overrides_seed(self, separable_blobs):
        a = rf_fit(separable_blobs,
                   ClassifierSpec("RandomForest",
                                  {"n_estimators": 5, "random_state": 42}, seed=1))
        b = rf_fit(separable_blobs,
                   ClassifierSpec("RandomForest",
                                  {"n_estimators": 5, "random_state": 42}, seed=2))
        np.testing.assert_array_equal(a.predict(separable_blobs.features),
                                      b.predict(separable_blobs.features))


def replay_adaboost_errors(model, ds):
    """Independent reconstruction of each round's weighted error."""
    w = np.full(ds.rows, 1.0 / ds.rows)
    lr = float(model.spec.get("learning_rate", 1.0))
    k = ds.class_count
    errors = []
    for stump, alpha in zip(model.stumps, model.stage_weights):
        wrong = tree_predict(stump, ds.features) != ds.labels
        err = float(w[wrong].sum() / w.sum())
        errors.append(err)
        if err == 0.0:
            break
        w = w * np.exp(alpha * wrong)
        w = w / w.sum()
    return errors


class TestAdaBoost:
    def test_stump_separable_early_stop(self):
        ds = one_dim([0.0, 1.0, 2.0, 3.0], [0, 0, 1, 1])
        model = adaboost_fit(ds, ClassifierSpec("AdaBoost", {"n_estimators": 50}))
        assert model.stage_errors[0] < 0.5
        assert model.stage_errors == [0.0]
        assert len(model.stumps) == 1
        assert model.accuracy(ds) == 1.0

    def test_internal_errors_match_replay(self, xor_points):
        model = adaboost_fit(xor_points,
                             ClassifierSpec("AdaBoost", {"n_estimators": 30}))
        assert len(model.stumps) > 1  # xor is not stump-separable
        replayed = replay_adaboost_errors(model, xor_points)
        assert len(replayed) == len(model.stage_errors)
        for ours, theirs in zip(model.stage_errors, replayed):
            assert abs(ours - theirs) <= 1e-12

    def test_binary_stage_weight_formula(self, xor_points):
        lr = 0.5
        model = adaboost_fit(xor_points,
                             ClassifierSpec("AdaBoost", {"n_estimators": 10,
                                                         "learning_rate": lr}))
        for err, alpha in zip(model.stage_errors, model.stage_weights):
            if err == 0.0:
                continue
            # K=2 collapses the multiclass correction term to zero
            assert alpha == pytest.approx(lr * np.log((1 - err) / err), rel=1e-12)

    def test_extreme_learning_rate_stays_finite(self, xor_points):
        model = adaboost_fit(xor_points,
                             ClassifierSpec("AdaBoost", {"n_estimators": 50,
                                                         "learning_rate": 10}))
        assert all(np.isfinite(a) for a in model.stage_weights)
        proba = model.predict_proba(xor_points.features)
        assert np.isfinite(proba).all()
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    def test_multiclass_weight_includes_correction(self):
        tri = make_blobs(10, [(-4.0, 0.0), (4.0, 0.0), (0.0, 5.0)], scale=2.0,
                         seed=6, tag="tri")
        model = adaboost_fit(tri, ClassifierSpec("AdaBoost", {"n_estimators": 5}))
        for err, alpha in zip(model.stage_errors, model.stage_weights):
            if err == 0.0:
                continue
            expected = np.log((1 - err) / err) + np.log(2.0)
            assert alpha == pytest.approx(expected, rel=1e-12)


class TestGbt:
    def test_separable_reaches_full_accuracy(self):
        ds = one_dim([0.0, 0.5, 1.0, 2.0, 2.5, 3.0], [0, 0, 0, 1, 1, 1])
        model = gbt_fit(ds, ClassifierSpec("GBT", {"n_estimators": 10,
                                                   "max_depth": 3,
                                                   "learning_rate": 0.1}))
        assert model.accuracy(ds) == 1.0

    def test_training_loss_monotone_full_sample(self, separable_blobs):
        model = gbt_fit(separable_blobs,
                        ClassifierSpec("GBT", {"n_estimators": 15,
                                               "learning_rate": 0.1,
                                               "subsample": 1}))
        losses = model.train_losses
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_vanishing_learning_rate_keeps_prior(self):
        ds = one_dim([0.0, 1.0, 2.0, 3.0, 4.0], [1, 1, 1, 0, 0])
        model = gbt_fit(ds, ClassifierSpec("GBT", {"n_estimators": 1,
                                                   "learning_rate": 1e-12}))
        pred = model.predict(ds.features)
        np.testing.assert_array_equal(pred, np.ones(5, dtype=np.int64))

    def test_subsample_seeded_determinism(self, separable_blobs):
        spec = ClassifierSpec("GBT", {"n_estimators": 5, "subsample": 0.7}, seed=3)
        a = gbt_fit(separable_blobs, spec)
        b = gbt_fit(separable_blobs, spec)
        np.testing.assert_array_equal(a.predict(separable_blobs.features),
                                      b.predict(separable_blobs.features))
        np.testing.assert_array_equal(a.train_losses, b.train_losses)
