"""Gaussian naive Bayes: per-class feature means and variances by
maximum likelihood, posterior = prior times the product of univariate
normal densities."""

from __future__ import annotations

import numpy as np

from ..data import LabeledDataset, ensure_features
from ..errors import ConfigError
from .base import ClassifierSpec, FittedModel

DEFAULT_VAR_SMOOTHING = 1e-9


class GaussianNBModel(FittedModel):
    def __init__(self, spec, class_count, n_features, priors, means, variances):
        super().__init__(spec, class_count, n_features)
        self.priors = priors
        self.means = means          # (K, d)
        self.variances = variances  # (K, d), already smoothed

    def _joint_log_likelihood(self, x: np.ndarray) -> np.ndarray:
        parts = []
        for c in range(self.class_count):
            var = self.variances[c]
            log_density = -0.5 * (
                np.log(2.0 * np.pi * var) + (x - self.means[c]) ** 2 / var
            ).sum(axis=1)
            parts.append(np.log(self.priors[c]) + log_density)
        return np.column_stack(parts)

    def predict_proba(self, x) -> np.ndarray:
        jll = self._joint_log_likelihood(self._check_input(x))
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)


def gnb_fit(train: LabeledDataset, spec: ClassifierSpec) -> GaussianNBModel:
    """Estimate means/variances per class and feature; variances are
    inflated by var_smoothing times the largest per-feature variance of
    the whole training matrix. A `priors` hyperparameter overrides the
    empirical class frequencies (it must have one entry per class and
    sum to 1)."""
    x = ensure_features(train.features)
    k = train.class_count
    var_smoothing = float(spec.get("var_smoothing", DEFAULT_VAR_SMOOTHING))
    epsilon = var_smoothing * float(x.var(axis=0).max())

    priors_param = spec.get("priors")
    if priors_param is None:
        priors = train.class_sizes() / train.rows
    else:
        priors = np.asarray(priors_param, dtype=np.float64)
        if priors.shape[0] != k:
            raise ConfigError(
                f"priors has {priors.shape[0]} entries for {k} classes"
            )
        if abs(priors.sum() - 1.0) > 1e-8:
            raise ConfigError(f"priors must sum to 1, got {priors.sum()}")

    means = np.empty((k, x.shape[1]))
    variances = np.empty((k, x.shape[1]))
    for c in range(k):
        rows = x[train.labels == c]
        means[c] = rows.mean(axis=0)
        variances[c] = rows.var(axis=0) + epsilon
    if (variances <= 0).any():
        variances = np.maximum(variances, 1e-300)
    return GaussianNBModel(spec, k, x.shape[1], priors, means, variances)
