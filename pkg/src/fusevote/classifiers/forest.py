"""Random forest: CART trees on bootstrap resamples with per-split
random feature subsets, combined by majority vote."""

from __future__ import annotations

import numpy as np

from ..data import LabeledDataset, ensure_features
from .base import ClassifierSpec, FittedModel
from .tree import cart_fit, tree_predict

DEFAULT_N_ESTIMATORS = 100


def _resolve_max_features(rule, d: int) -> int | None:
    if rule is None:
        return None
    if rule in ("auto", "sqrt"):  # Table-style grids list both as synonyms
        return max(1, int(np.sqrt(d)))
    if rule == "log2":
        return max(1, int(np.log2(d))) if d > 1 else 1
    raise ValueError(f"unknown max_features rule {rule!r}")


class RandomForestModel(FittedModel):
    def __init__(self, spec, class_count, n_features, trees, oob_score):
        super().__init__(spec, class_count, n_features)
        self.trees = trees
        self.oob_score_ = oob_score  # None unless bootstrap and oob_score

    def _votes(self, x: np.ndarray) -> np.ndarray:
        counts = np.zeros((x.shape[0], self.class_count))
        for tree in self.trees:
            pred = tree_predict(tree, x)
            counts[np.arange(x.shape[0]), pred] += 1.0
        return counts

    def predict_proba(self, x) -> np.ndarray:
        counts = self._votes(self._check_input(x))
        return counts / counts.sum(axis=1, keepdims=True)


def rf_fit(train: LabeledDataset, spec: ClassifierSpec) -> RandomForestModel:
    """Grow n_estimators trees; with bootstrap=False every tree sees
    the full data (they still differ through feature subsampling).

    With bootstrap and oob_score=True the model carries the out-of-bag
    accuracy in `oob_score_`; with bootstrap=False there is no
    out-of-bag sample and the attribute stays None.
    """
    x = ensure_features(train.features)
    y = train.labels
    n, d = x.shape
    n_estimators = int(spec.get("n_estimators", DEFAULT_N_ESTIMATORS))
    bootstrap = bool(spec.get("bootstrap", True))
    want_oob = bool(spec.get("oob_score", False)) and bootstrap
    max_features = _resolve_max_features(spec.get("max_features", "sqrt"), d)
    max_depth = spec.get("max_depth")
    criterion = spec.get("criterion", "gini")
    min_split = int(spec.get("min_samples_split", 2))
    min_leaf = int(spec.get("min_samples_leaf", 1))

    seeds = np.random.SeedSequence([int(spec.effective_seed), 0x4F]).spawn(n_estimators)
    trees = []
    oob_votes = np.zeros((n, train.class_count)) if want_oob else None
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if bootstrap:
            sample = rng.integers(0, n, size=n)
        else:
            sample = np.arange(n)
        tree = cart_fit(
            x[sample], y[sample], train.class_count,
            max_depth=None if max_depth is None else int(max_depth),
            max_features=max_features, rng=rng, criterion=criterion,
            min_samples_split=min_split, min_samples_leaf=min_leaf,
        )
        trees.append(tree)
        if want_oob:
            mask = np.ones(n, dtype=bool)
            mask[np.unique(sample)] = False
            if mask.any():
                pred = tree_predict(tree, x[mask])
                oob_votes[np.flatnonzero(mask), pred] += 1.0

    oob_score = None
    if want_oob:
        voted = oob_votes.sum(axis=1) > 0
        if voted.any():
            oob_pred = np.argmax(oob_votes[voted], axis=1)
            oob_score = float(np.mean(oob_pred == y[voted]))
    return RandomForestModel(spec, train.class_count, d, trees, oob_score)
