import numpy as np
import pytest

from fusevote.classifiers import (
    ClassifierSpec,
    fit,
    kernel_eval,
    kkt_residual_from_scratch,
    svm_fit,
)
from fusevote.data import LabeledDataset
from fusevote.errors import ConvergenceError, FitError, ShapeError

from conftest import make_blobs


class TestKernelEval:
    def test_linear_dot(self):
        assert kernel_eval("linear", (1.0, 1.0), (1.0, 1.0)) == 2.0

    def test_rbf_zero_distance(self):
        assert kernel_eval("rbf", (0.3, -2.0), (0.3, -2.0), gamma=0.7) == 1.0

    def test_sigmoid_at_origin(self):
        assert kernel_eval("sigmoid", (1.0, 0.0), (0.0, 1.0), gamma=1.0, coef0=0.0) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            kernel_eval("linear", (1.0,), (1.0, 2.0))

    def test_rbf_formula(self):
        x, z = np.array([1.0, 2.0]), np.array([3.0, -1.0])
        expected = np.exp(-0.5 * np.sum((x - z) ** 2))
        assert kernel_eval("rbf", x, z, gamma=0.5) == pytest.approx(expected, rel=1e-12)


def _binary_solution(model):
    assert len(model._solutions) == 1
    return model._solutions[0]


class TestSvmFit:
    def test_separable_blobs_linear(self, separable_blobs):
        model = svm_fit(separable_blobs, ClassifierSpec("SVM-linear", {"C": 10}))
        assert model.accuracy(separable_blobs) == 1.0
        assert kkt_residual_from_scratch(model, separable_blobs) < 1e-3

    def test_xor_rbf(self, xor_points):
        model = svm_fit(xor_points, ClassifierSpec("SVM-RBF", {"C": 10, "gamma": 1.0}))
        assert model.accuracy(xor_points) == 1.0

    def test_single_class_rejected(self):
        ds = LabeledDataset(np.arange(8.0).reshape(4, 2), [0, 0, 0, 0], 1, "one")
        with pytest.raises(FitError):
            svm_fit(ds, ClassifierSpec("SVM-linear", {"C": 1}))

    def test_box_and_equality_constraints(self, separable_blobs):
        C = 5.0
        model = svm_fit(separable_blobs, ClassifierSpec("SVM-linear", {"C": C}))
        sol = _binary_solution(model)
        y = np.where(separable_blobs.labels[sol.support] == 1, 1.0, -1.0)
        alphas = sol.dual_coef * y  # dual_coef = alpha * y
        assert (alphas >= -1e-12).all() and (alphas <= C + 1e-12).all()
        assert abs(np.sum(sol.dual_coef)) <= 1e-6  # sum alpha_n y_n

    def test_binary_sign_decision(self, separable_blobs):
        model = svm_fit(separable_blobs, ClassifierSpec("SVM-linear", {"C": 10}))
        values = model.decision_values(separable_blobs.features)[:, 0]
        pred = model.predict(separable_blobs.features)
        np.testing.assert_array_equal(pred, (values > 0).astype(int))

    def test_sigmoid_kernel_trains(self, separable_blobs):
        model = svm_fit(
            separable_blobs,
            ClassifierSpec("SVM-sigmoid", {"C": 1.0, "gamma": "scale", "coef0": 0.0}),
        )
        assert model.accuracy(separable_blobs) >= 0.9

    def test_iteration_cap_raises_with_residual(self, separable_blobs):
        with pytest.raises(ConvergenceError) as exc:
            svm_fit(separable_blobs,
                    ClassifierSpec("SVM-RBF", {"C": 10, "gamma": 1.0, "max_iter": 1}))
        assert exc.value.residual is not None and exc.value.residual > 0

    def test_multiclass_one_vs_rest(self):
        tri = make_blobs(20, [(-4.0, 0.0), (4.0, 0.0), (0.0, 5.0)], scale=0.6,
                         seed=2, tag="tri")
        model = svm_fit(tri, ClassifierSpec("SVM-RBF", {"C": 10, "gamma": "scale"}))
        assert len(model._solutions) == 3
        assert model.accuracy(tri) == 1.0

    def test_balanced_class_weight(self):
        skew = make_blobs(12, [(-2.0, 0.0), (2.0, 0.0)], scale=0.7, seed=4)
        extra = make_blobs(36, [(-2.0, 0.0)], scale=0.7, seed=5)
        features = np.vstack([skew.features, extra.features])
        labels = np.concatenate([skew.labels, np.zeros(36, dtype=np.int64)])
        ds = LabeledDataset(features, labels, 2, "skewed")
        model = svm_fit(ds, ClassifierSpec("SVM-linear", {"C": 1.0,
                                                          "class_weight": "balanced"}))
        pred = model.predict(ds.features)
        assert np.mean(pred[ds.labels == 1] == 1) >= 0.9

    def test_kkt_residual_attribute_matches_recompute(self, xor_points):
        model = svm_fit(xor_points, ClassifierSpec("SVM-RBF", {"C": 10, "gamma": 1.0}))
        scratch = kkt_residual_from_scratch(model, xor_points)
        assert scratch < 1e-3
        assert model.kkt_residual < 1e-3
