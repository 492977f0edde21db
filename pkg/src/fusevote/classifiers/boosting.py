"""Boosted tree ensembles: multiclass AdaBoost over decision stumps
and gradient-boosted trees on a second-order logistic objective.

AdaBoost stage weights follow the multiclass exponential-loss rule
alpha = lr * (ln((1 - err) / err) + ln(K - 1)); boosting stops early on
a perfect stump (err = 0) or one no better than chance
(err >= 1 - 1/K).

GBT maintains one score column per class, updated each stage by a
regression tree fitted to the softmax gradients g = p - y and hessians
h = p (1 - p); leaves take the Newton value -G / (H + 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import LabeledDataset, ensure_features
from ..errors import FitError
from .base import ClassifierSpec, FittedModel
from .tree import TreeNode, cart_fit, tree_predict
from .._rng import rng_for

ADABOOST_DEFAULT_ESTIMATORS = 100
GBT_LAMBDA = 1.0


class AdaBoostModel(FittedModel):
    def __init__(self, spec, class_count, n_features, stumps, stage_weights,
                 stage_errors):
        super().__init__(spec, class_count, n_features)
        self.stumps = stumps
        self.stage_weights = stage_weights
        self.stage_errors = stage_errors  # weighted training error per round

    def _scores(self, x: np.ndarray) -> np.ndarray:
        scores = np.zeros((x.shape[0], self.class_count))
        for stump, alpha in zip(self.stumps, self.stage_weights):
            pred = tree_predict(stump, x)
            scores[np.arange(x.shape[0]), pred] += alpha
        return scores

    def predict_proba(self, x) -> np.ndarray:
        scores = self._scores(self._check_input(x))
        totals = scores.sum(axis=1, keepdims=True)
        return scores / totals


def adaboost_fit(train: LabeledDataset, spec: ClassifierSpec) -> AdaBoostModel:
    """Boost depth-1 CART stumps on reweighted data."""
    x = ensure_features(train.features)
    y = train.labels
    n = x.shape[0]
    k = train.class_count
    rounds = int(spec.get("n_estimators", ADABOOST_DEFAULT_ESTIMATORS))
    lr = float(spec.get("learning_rate", 1.0))

    w = np.full(n, 1.0 / n)
    stumps, alphas, errors = [], [], []
    for _ in range(rounds):
        stump = cart_fit(x, y, k, max_depth=1, sample_weight=w)
        pred = tree_predict(stump, x)
        wrong = pred != y
        err = float(w[wrong].sum() / w.sum())
        if err == 0.0:
            stumps.append(stump)
            alphas.append(1.0)
            errors.append(0.0)
            break
        if err >= 1.0 - 1.0 / k:
            if not stumps:
                raise FitError(
                    f"first stump is no better than chance (error {err:.3f})"
                )
            break
        alpha = lr * (np.log((1.0 - err) / err) + np.log(k - 1.0))
        if alpha <= 0.0:
            break
        stumps.append(stump)
        alphas.append(float(alpha))
        errors.append(err)
        # large learning rates concentrate weight fast; once the update
        # leaves float64 range the distribution is degenerate, so stop
        with np.errstate(over="ignore", invalid="ignore"):
            w = w * np.exp(alpha * wrong)
            total = w.sum()
            if not np.isfinite(total) or total <= 0.0 or not np.isfinite(w).all():
                break
            w = w / total
    return AdaBoostModel(spec, k, x.shape[1], stumps, alphas, errors)


@dataclass
class _RegNode:
    feature: int
    threshold: float
    left: "_RegNode | None"
    right: "_RegNode | None"
    value: float

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _fit_grad_tree(x, g, h, depth_left: int) -> _RegNode:
    """Greedy regression tree maximizing the second-order gain."""
    G, H = g.sum(), h.sum()
    leaf = _RegNode(-1, 0.0, None, None, -G / (H + GBT_LAMBDA))
    if depth_left == 0 or x.shape[0] < 2:
        return leaf
    parent_score = G * G / (H + GBT_LAMBDA)
    best = None  # (gain, feature, threshold)
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        gs = np.cumsum(g[order])
        hs = np.cumsum(h[order])
        boundaries = np.flatnonzero(xs[1:] > xs[:-1])
        for b in boundaries:
            gl, hl = gs[b], hs[b]
            gr, hr = G - gl, H - hl
            gain = (
                gl * gl / (hl + GBT_LAMBDA)
                + gr * gr / (hr + GBT_LAMBDA)
                - parent_score
            ) / 2.0
            if gain > 1e-12 and (best is None or gain > best[0] + 1e-12):
                best = (gain, f, (xs[b] + xs[b + 1]) / 2.0)
    if best is None:
        return leaf
    _, f, threshold = best
    go_left = x[:, f] <= threshold
    left = _fit_grad_tree(x[go_left], g[go_left], h[go_left], depth_left - 1)
    right = _fit_grad_tree(x[~go_left], g[~go_left], h[~go_left], depth_left - 1)
    return _RegNode(f, threshold, left, right, leaf.value)


def _grad_tree_apply(node: _RegNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0])

    def walk(n: _RegNode, idx: np.ndarray):
        if n.is_leaf or idx.size == 0:
            out[idx] = n.value
            return
        go_left = x[idx, n.feature] <= n.threshold
        walk(n.left, idx[go_left])
        walk(n.right, idx[~go_left])

    walk(node, np.arange(x.shape[0]))
    return out


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class GBTModel(FittedModel):
    def __init__(self, spec, class_count, n_features, base_scores, stages,
                 learning_rate, train_losses):
        super().__init__(spec, class_count, n_features)
        self.base_scores = base_scores          # prior log-odds per class
        self.stages = stages                    # list of per-class tree lists
        self.learning_rate = learning_rate
        self.train_losses = train_losses        # loss before each stage + final

    def decision_values(self, x) -> np.ndarray:
        x = self._check_input(x)
        scores = np.tile(self.base_scores, (x.shape[0], 1))
        for stage in self.stages:
            for c, tree in enumerate(stage):
                scores[:, c] += self.learning_rate * _grad_tree_apply(tree, x)
        return scores

    def predict_proba(self, x) -> np.ndarray:
        return _softmax_rows(self.decision_values(x))


def gbt_fit(train: LabeledDataset, spec: ClassifierSpec) -> GBTModel:
    """Staged additive model; each stage fits one gradient tree per
    class on the subsampled rows and adds it scaled by learning_rate."""
    x = ensure_features(train.features)
    y = train.labels
    n = x.shape[0]
    k = train.class_count
    n_stages = int(spec.get("n_estimators", 100))
    lr = float(spec.get("learning_rate", 0.1))
    subsample = float(spec.get("subsample", 1.0))
    max_depth = int(spec.get("max_depth", 3))
    rng = rng_for(spec.effective_seed, 0x6B)

    onehot = np.eye(k)[y]
    base = np.log(train.class_sizes() / n)
    scores = np.tile(base, (n, 1))
    stages, losses = [], []
    for _ in range(n_stages):
        p = _softmax_rows(scores)
        losses.append(float(-np.mean(np.log(np.maximum(p[np.arange(n), y], 1e-300)))))
        if subsample < 1.0:
            m = max(1, int(round(subsample * n)))
            rows = np.sort(rng.permutation(n)[:m])
        else:
            rows = np.arange(n)
        g = p - onehot
        h = p * (1.0 - p)
        stage = []
        for c in range(k):
            stage.append(_fit_grad_tree(x[rows], g[rows, c], h[rows, c], max_depth))
            scores[:, c] += lr * _grad_tree_apply(stage[-1], x)
        stages.append(stage)
    p = _softmax_rows(scores)
    losses.append(float(-np.mean(np.log(np.maximum(p[np.arange(n), y], 1e-300)))))
    return GBTModel(spec, k, x.shape[1], base, stages, lr, losses)
