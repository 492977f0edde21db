"""Fit-on-train / apply-to-both feature transforms: min-max scaling to
[0, 1], PCA keeping the top half of the components, and SMOTE
minority oversampling.

Fitted transform objects are immutable; fitting itself is
single-threaded per call but distinct transforms can be fitted
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, ensure_features
from .errors import ConfigError, FitError, ShapeError
from ._rng import rng_for


@dataclass(frozen=True)
class MinMaxStats:
    """Per-column training minima and maxima."""

    y_min: np.ndarray
    y_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.y_min, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.y_max, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise ShapeError("y_min and y_max must have equal length")
        if (lo > hi).any():
            raise ShapeError("y_min must be columnwise <= y_max")
        object.__setattr__(self, "y_min", lo)
        object.__setattr__(self, "y_max", hi)


def minmax_fit(train: np.ndarray) -> MinMaxStats:
    """Columnwise min/max of the training matrix."""
    x = ensure_features(train)
    return MinMaxStats(x.min(axis=0), x.max(axis=0))


def minmax_apply(x: np.ndarray, stats: MinMaxStats) -> np.ndarray:
    """Scale columns by |(value - min) / (max - min)|.

    Training columns land in [0, 1]; constant columns map to 0; values
    outside the training range are not clipped, so test data may fall
    outside [0, 1].
    """
    x = ensure_features(x)
    if x.shape[1] != stats.y_min.shape[0]:
        raise ShapeError(
            f"matrix has {x.shape[1]} columns, stats cover {stats.y_min.shape[0]}"
        )
    span = stats.y_max - stats.y_min
    safe = np.where(span == 0.0, 1.0, span)
    scaled = np.abs((x - stats.y_min) / safe)
    scaled[:, span == 0.0] = 0.0
    return scaled


@dataclass(frozen=True)
class PCAModel:
    """Mean vector plus an orthonormal basis of principal directions
    (rows of `components`), eigenvalues descending."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]


def pca_fit(train: np.ndarray) -> PCAModel:
    """Principal directions of the mean-centered data, keeping
    ceil(d / 2) components.

    Eigenvalues use the n-1 normalization of the sample covariance.
    Computed through an SVD of the centered matrix for stability; each
    component's sign is fixed so its largest-magnitude entry is
    positive, making fits bitwise reproducible.
    """
    x = ensure_features(train)
    n, d = x.shape
    if n < 2:
        raise FitError(f"PCA needs at least 2 rows, got {n}")
    k = int(np.ceil(d / 2))
    mean = x.mean(axis=0)
    centered = x - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    variances = singular**2 / (n - 1)
    if vt.shape[0] < k:  # n-1 < k: pad the basis with unused directions
        pad = np.zeros((k - vt.shape[0], d))
        vt = np.vstack([vt, pad])
        variances = np.concatenate([variances, np.zeros(k - variances.shape[0])])
    components = vt[:k]
    variances = variances[:k]
    anchor = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k), anchor])
    signs[signs == 0] = 1.0
    return PCAModel(mean, components * signs[:, None], variances)


def pca_apply(x: np.ndarray, model: PCAModel) -> np.ndarray:
    """Project rows onto the retained components: (x - mean) @ V^T."""
    x = ensure_features(x)
    if x.shape[1] != model.n_features:
        raise ShapeError(
            f"matrix has {x.shape[1]} columns, model expects {model.n_features}"
        )
    return (x - model.mean) @ model.components.T


@dataclass(frozen=True)
class SmoteConfig:
    """Neighbor count and seed for synthetic minority oversampling."""

    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


def synth_sample(x_i: np.ndarray, x_knn: np.ndarray, t: float) -> np.ndarray:
    """One synthetic point on the parent-to-neighbor segment:
    x_i + (x_knn - x_i) * t."""
    return np.asarray(x_i, dtype=np.float64) + (
        np.asarray(x_knn, dtype=np.float64) - np.asarray(x_i, dtype=np.float64)
    ) * float(t)


def _k_nearest(within: np.ndarray, i: int, k: int) -> np.ndarray:
    diff = within - within[i]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    dist[i] = np.inf
    order = np.argsort(dist, kind="stable")
    return order[:k]


def smote_oversample(ds: LabeledDataset, cfg: SmoteConfig) -> LabeledDataset:
    """Balance every class up to the majority count with synthetic
    samples interpolated toward k-nearest same-class neighbors.

    Originals are preserved verbatim (synthetics are appended, grouped
    by class id). A dataset that is already balanced comes back
    unchanged. Raises ConfigError when a class that needs synthesis has
    fewer than k_neighbors + 1 members.
    """
    sizes = ds.class_sizes()
    majority = int(sizes.max())
    if (sizes == majority).all():
        return ds

    rng = rng_for(cfg.seed, 0x50)
    new_rows, new_labels = [], []
    for cls in range(ds.class_count):
        need = majority - int(sizes[cls])
        if need == 0:
            continue
        if int(sizes[cls]) <= cfg.k_neighbors:
            raise ConfigError(
                f"class {cls} has {int(sizes[cls])} samples; SMOTE with "
                f"k_neighbors={cfg.k_neighbors} needs more than {cfg.k_neighbors}"
            )
        members = ds.features[ds.labels == cls]
        for _ in range(need):
            i = int(rng.integers(0, members.shape[0]))
            neighbors = _k_nearest(members, i, cfg.k_neighbors)
            j = int(neighbors[rng.integers(0, neighbors.shape[0])])
            t = float(rng.random())
            new_rows.append(synth_sample(members[i], members[j], t))
            new_labels.append(cls)

    features = np.vstack([ds.features, np.asarray(new_rows)])
    labels = np.concatenate([ds.labels, np.asarray(new_labels, dtype=np.int64)])
    return LabeledDataset(features, labels, ds.class_count, ds.source_tag)
