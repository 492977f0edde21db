"""CART classification trees: greedy binary splits minimizing weighted
gini (or entropy) impurity, thresholds at midpoints between observed
feature values, leaves storing the weighted class distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitError


@dataclass
class TreeNode:
    """Internal node when feature >= 0, leaf otherwise."""

    feature: int
    threshold: float
    left: "TreeNode | None"
    right: "TreeNode | None"
    distribution: np.ndarray  # weighted class proportions, sums to 1

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def gini(dist: np.ndarray) -> float:
    return float(1.0 - np.sum(dist**2))


def entropy(dist: np.ndarray) -> float:
    nz = dist[dist > 0]
    return float(-np.sum(nz * np.log2(nz)))


_IMPURITY = {"gini": gini, "entropy": entropy}


def _class_weight_sums(y: np.ndarray, w: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(y, weights=w, minlength=k)


def _best_split(x, y, w, k, features, criterion, min_samples_leaf):
    """Best (feature, threshold, gain) over candidate features, or None.

    Scans each feature's sorted values with cumulative weighted class
    counts; candidate thresholds are midpoints between consecutive
    distinct values. First-best wins on gain ties (features are scanned
    in the given order, thresholds ascending).
    """
    impurity = _IMPURITY[criterion]
    total = _class_weight_sums(y, w, k)
    total_w = total.sum()
    parent = impurity(total / total_w)
    n = y.shape[0]
    best = None  # (gain, feature, threshold)
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        ws = w[order]
        cum = np.zeros((n, k))
        np.add.at(cum, (np.arange(n), ys), ws)
        cum = np.cumsum(cum, axis=0)
        boundaries = np.flatnonzero(xs[1:] > xs[:-1])  # split after position b
        for b in boundaries:
            n_left = b + 1
            if n_left < min_samples_leaf or n - n_left < min_samples_leaf:
                continue
            left = cum[b]
            right = total - left
            wl, wr = left.sum(), right.sum()
            if wl <= 0 or wr <= 0:
                continue
            child = (wl * impurity(left / wl) + wr * impurity(right / wr)) / total_w
            gain = parent - child
            if gain > 1e-15 and (best is None or gain > best[0] + 1e-15):
                best = (gain, f, (xs[b] + xs[b + 1]) / 2.0)
    return best


def cart_fit(x: np.ndarray, y: np.ndarray, class_count: int,
             max_depth: int | None = None,
             sample_weight: np.ndarray | None = None,
             max_features: int | None = None,
             rng: np.random.Generator | None = None,
             criterion: str = "gini",
             min_samples_split: int = 2,
             min_samples_leaf: int = 1) -> TreeNode:
    """Grow a tree top-down until purity, depth, or minimum-size stops.

    `max_features` limits how many randomly chosen features each split
    considers first; if none of them yields a valid split, the
    remaining features are tried before declaring a leaf, so a tree on
    distinct rows can always memorize its training set.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.ones(y.shape[0]) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if not np.isfinite(w).all() or (w < 0).any() or w.sum() <= 0:
        raise FitError("sample weights must be finite, nonnegative, not all zero")
    keep = w > 0
    x, y, w = x[keep], y[keep], w[keep]

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        dist = _class_weight_sums(y[idx], w[idx], class_count)
        dist = dist / dist.sum()
        leaf = TreeNode(-1, 0.0, None, None, dist)
        if (dist > 0).sum() <= 1:
            return leaf
        if max_depth is not None and depth >= max_depth:
            return leaf
        if idx.shape[0] < min_samples_split:
            return leaf

        d = x.shape[1]
        if max_features is None or max_features >= d:
            primary, fallback = list(range(d)), []
        else:
            perm = rng.permutation(d) if rng is not None else np.arange(d)
            primary = sorted(int(i) for i in perm[:max_features])
            fallback = sorted(int(i) for i in perm[max_features:])
        split = _best_split(x[idx], y[idx], w[idx], class_count, primary,
                            criterion, min_samples_leaf)
        if split is None and fallback:
            split = _best_split(x[idx], y[idx], w[idx], class_count, fallback,
                                criterion, min_samples_leaf)
        if split is None:
            return leaf
        _, f, threshold = split
        go_left = x[idx, f] <= threshold
        left = build(idx[go_left], depth + 1)
        right = build(idx[~go_left], depth + 1)
        return TreeNode(f, threshold, left, right, dist)

    return build(np.arange(y.shape[0]), 0)


def tree_apply(node: TreeNode, x: np.ndarray) -> np.ndarray:
    """Leaf distribution for every row of x, shape (n, K)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], node.distribution.shape[0]))

    def walk(n: TreeNode, idx: np.ndarray):
        if n.is_leaf or idx.size == 0:
            out[idx] = n.distribution
            return
        go_left = x[idx, n.feature] <= n.threshold
        walk(n.left, idx[go_left])
        walk(n.right, idx[~go_left])

    walk(node, np.arange(x.shape[0]))
    return out


def tree_predict(node: TreeNode, x: np.ndarray) -> np.ndarray:
    return np.argmax(tree_apply(node, x), axis=1).astype(np.int64)
