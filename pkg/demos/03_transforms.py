"""The three ablation transforms: min-max scaling, PCA, SMOTE.

All three fit on the training partition only and then apply to any
matrix, which is what keeps the held-out test rows honest.
"""

import numpy as np

from fusevote.data import LabeledDataset
from fusevote.transforms import (
    SmoteConfig,
    minmax_apply,
    minmax_fit,
    pca_apply,
    pca_fit,
    smote_oversample,
)

rng = np.random.default_rng(1)

train = rng.normal(loc=10.0, scale=3.0, size=(40, 6))
test = rng.normal(loc=10.0, scale=3.0, size=(10, 6))
stats = minmax_fit(train)
print("min-max: train columns land exactly on [0, 1]:",
      minmax_apply(train, stats).min(), "..", minmax_apply(train, stats).max())
print("         test rows may straddle the training range:",
      round(minmax_apply(test, stats).min(), 3), "..",
      round(minmax_apply(test, stats).max(), 3))

stretched = rng.normal(size=(200, 8)) * np.array([5, 4, 3, 2, 1, 0.5, 0.2, 0.1])
model = pca_fit(stretched)
print(f"\nPCA keeps the top half of the directions: {stretched.shape[1]} -> "
      f"{model.n_components} components")
print("eigenvalues (descending):",
      np.round(model.explained_variance, 2).tolist())
print("projected shape:", pca_apply(stretched, model).shape)

x = np.vstack([rng.normal(0, 1, size=(150, 4)), rng.normal(4, 1, size=(60, 4))])
y = np.r_[np.zeros(150, dtype=np.int64), np.ones(60, dtype=np.int64)]
imbalanced = LabeledDataset(x, y, 2, "demo")
balanced = smote_oversample(imbalanced, SmoteConfig(k_neighbors=5, seed=3))
print(f"\nSMOTE: class sizes {imbalanced.class_sizes().tolist()} -> "
      f"{balanced.class_sizes().tolist()}")
print("originals are preserved verbatim; each synthetic row sits on the "
      "segment between a minority sample and one of its nearest minority "
      "neighbors")
