import numpy as np
import pytest

from fusevote.data import LabeledDataset


def make_blobs(n_per_class, centers, scale=1.0, seed=0, tag="blobs"):
    """Gaussian blobs around the given class centers."""
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for cls, center in enumerate(centers):
        center = np.asarray(center, dtype=np.float64)
        rows.append(rng.normal(center, scale, size=(n_per_class, center.shape[0])))
        labels.extend([cls] * n_per_class)
    x = np.vstack(rows)
    y = np.asarray(labels, dtype=np.int64)
    perm = rng.permutation(y.shape[0])
    return LabeledDataset(x[perm], y[perm], len(centers), tag)


@pytest.fixture
def separable_blobs():
    return make_blobs(30, [(-3.0, -3.0), (3.0, 3.0)], scale=0.5, seed=1)


@pytest.fixture
def xor_points():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]] * 5)
    x = x + np.random.default_rng(3).normal(0, 0.05, size=x.shape)
    y = np.array([0, 0, 1, 1] * 5, dtype=np.int64)
    return LabeledDataset(x, y, 2, "xor")
