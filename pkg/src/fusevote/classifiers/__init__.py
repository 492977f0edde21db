"""Nine classifier families behind one fit/predict contract.

`fit(train, spec)` dispatches on `spec.family`; every fitted model
offers `predict` (labels 0..K-1) and `predict_proba` (rows sum to 1,
argmax consistent with predict). Fits with the same spec and seed are
bitwise reproducible.
"""

from __future__ import annotations

import numpy as np

from ..data import LabeledDataset
from ..errors import FitError
from .base import (
    ADABOOST,
    FAMILIES,
    GAUSSIAN_NB,
    GBT,
    KNN,
    MLP,
    RANDOM_FOREST,
    SVM_LINEAR,
    SVM_RBF,
    SVM_SIGMOID,
    ClassifierSpec,
    FittedModel,
    load_model,
    save_model,
    softmax,
    validate_hyperparams,
)
from .boosting import AdaBoostModel, GBTModel, adaboost_fit, gbt_fit
from .forest import RandomForestModel, rf_fit
from .gnb import GaussianNBModel, gnb_fit
from .knn import KNNModel, knn_fit, knn_predict, pairwise_distances
from .mlp import AdamState, MLPModel, adam_step, mlp_fit
from .svm import SVMModel, kernel_eval, kernel_matrix, kkt_residual_from_scratch, svm_fit
from .tree import TreeNode, cart_fit, tree_apply, tree_predict

_FITTERS = {
    GBT: gbt_fit,
    MLP: mlp_fit,
    GAUSSIAN_NB: gnb_fit,
    ADABOOST: adaboost_fit,
    KNN: knn_fit,
    RANDOM_FOREST: rf_fit,
    SVM_LINEAR: svm_fit,
    SVM_SIGMOID: svm_fit,
    SVM_RBF: svm_fit,
}


def fit(train: LabeledDataset, spec: ClassifierSpec) -> FittedModel:
    """Train `spec.family` on the dataset."""
    try:
        fitter = _FITTERS[spec.family]
    except KeyError:
        raise FitError(f"unknown classifier family {spec.family!r}") from None
    return fitter(train, spec)


def predict(model: FittedModel, x) -> np.ndarray:
    """Labels for a feature matrix (family-specific decision rule)."""
    return model.predict(x)


def predict_proba(model: FittedModel, x) -> np.ndarray:
    return model.predict_proba(x)


__all__ = [
    "ADABOOST", "FAMILIES", "GAUSSIAN_NB", "GBT", "KNN", "MLP",
    "RANDOM_FOREST", "SVM_LINEAR", "SVM_RBF", "SVM_SIGMOID",
    "AdaBoostModel", "AdamState", "ClassifierSpec", "FittedModel",
    "GBTModel", "GaussianNBModel", "KNNModel", "MLPModel",
    "RandomForestModel", "SVMModel", "TreeNode",
    "adam_step", "adaboost_fit", "cart_fit", "fit", "gbt_fit", "gnb_fit",
    "kernel_eval", "kernel_matrix", "kkt_residual_from_scratch", "knn_fit",
    "knn_predict", "load_model", "mlp_fit", "pairwise_distances", "predict",
    "predict_proba", "rf_fit", "save_model", "softmax", "svm_fit",
    "tree_apply", "tree_predict", "validate_hyperparams",
]
