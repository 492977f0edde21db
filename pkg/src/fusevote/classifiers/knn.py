"""k-nearest-neighbor classification by exhaustive distance scan.

Supported metrics: euclidean, manhattan, and minkowski with integer
order p. The `algorithm`, `leaf_size` and `n_jobs` hyperparameters are
accepted for grid compatibility but do not change results (every
strategy must return the same neighbors; this implementation always
scans).
"""

from __future__ import annotations

import numpy as np

from ..data import LabeledDataset, ensure_features
from ..errors import ConfigError
from .base import ClassifierSpec, FittedModel

DEFAULT_K = 5


def pairwise_distances(queries: np.ndarray, train: np.ndarray,
                       metric: str, p: int = 2) -> np.ndarray:
    """Distance matrix D[q, t] between query and training rows."""
    diff = queries[:, None, :] - train[None, :, :]
    if metric == "euclidean" or (metric == "minkowski" and p == 2):
        return np.sqrt(np.einsum("qtd,qtd->qt", diff, diff))
    if metric == "manhattan" or (metric == "minkowski" and p == 1):
        return np.abs(diff).sum(axis=2)
    if metric == "minkowski":
        return (np.abs(diff) ** p).sum(axis=2) ** (1.0 / p)
    raise ConfigError(f"unknown metric {metric!r}")


class KNNModel(FittedModel):
    """Stores the training set; all work happens at query time."""

    def __init__(self, spec, class_count, n_features, train_x, train_y):
        super().__init__(spec, class_count, n_features)
        self.train_x = train_x
        self.train_y = train_y
        k = int(spec.get("n_neighbors", DEFAULT_K))
        if k > train_x.shape[0]:
            raise ConfigError(
                f"n_neighbors={k} exceeds {train_x.shape[0]} training rows"
            )
        self.k = k
        self.weights = spec.get("weights", "uniform")
        self.metric = spec.get("metric", "euclidean")
        self.p = int(spec.get("p", 2))

    def kneighbors(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(distances, train indices) of the k nearest per query row;
        distance ties resolve toward the lower training index."""
        x = self._check_input(x)
        dist = pairwise_distances(x, self.train_x, self.metric, self.p)
        order = np.argsort(dist, axis=1, kind="stable")[:, :self.k]
        return np.take_along_axis(dist, order, axis=1), order

    def predict_proba(self, x) -> np.ndarray:
        dist, idx = self.kneighbors(x)
        labels = self.train_y[idx]
        if self.weights == "distance":
            zero = dist == 0.0
            weights = np.empty_like(dist)
            has_hit = zero.any(axis=1)
            with np.errstate(divide="ignore"):
                weights[~has_hit] = 1.0 / dist[~has_hit]
            weights[has_hit] = zero[has_hit].astype(np.float64)  # exact hits only
        else:
            weights = np.ones_like(dist)
        votes = np.zeros((dist.shape[0], self.class_count))
        for c in range(self.class_count):
            votes[:, c] = np.where(labels == c, weights, 0.0).sum(axis=1)
        return votes / votes.sum(axis=1, keepdims=True)


def knn_fit(train: LabeledDataset, spec: ClassifierSpec) -> KNNModel:
    x = ensure_features(train.features)
    return KNNModel(spec, train.class_count, x.shape[1], x.copy(),
                    train.labels.copy())


def knn_predict(model: KNNModel, query) -> np.ndarray:
    """Majority (or distance-weighted) label among the k nearest
    training samples; vote ties fall to the lower class id."""
    return model.predict(query)
