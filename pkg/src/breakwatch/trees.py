"""CART-style decision trees grown on numpy arrays.

Shared by the random-forest and gradient-boosting ensembles: classification
trees split on Gini impurity and store class distributions at the leaves,
regression trees split on squared error and store a scalar, optionally
recomputed by a caller-supplied leaf function (the boosting Newton step).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

LEAF = -1


@dataclass
class DecisionTree:
    """Struct-of-arrays binary tree; children index into the same arrays."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[list[float]] = field(default_factory=list)

    def _add_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append([])
        return len(self.feature) - 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row of X."""
        node = np.zeros(len(X), dtype=np.int64)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        active = feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            goes_left = X[idx, feature[cur]] <= threshold[cur]
            node[idx] = np.where(goes_left, left[cur], right[cur])
            active = feature[node] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        leaves = self.apply(X)
        # Only leaves are ever reached, so the rows stack to one width.
        return np.array([self.value[i] for i in leaves])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=list(d["feature"]),
            threshold=[float(t) for t in d["threshold"]],
            left=list(d["left"]),
            right=list(d["right"]),
            value=[list(map(float, v)) for v in d["value"]],
        )


def _gini_best_threshold(xs: np.ndarray, onehot: np.ndarray) -> tuple[float, float] | None:
    """Best (score, threshold) for one feature, or None without a valid cut."""
    order = np.argsort(xs, kind="stable")
    xs_sorted = xs[order]
    boundaries = np.flatnonzero(xs_sorted[:-1] < xs_sorted[1:])
    if boundaries.size == 0:
        return None
    counts = np.cumsum(onehot[order], axis=0)
    n = len(xs)
    n_left = boundaries + 1
    n_right = n - n_left
    left_counts = counts[boundaries]
    right_counts = counts[-1] - left_counts
    gini_left = 1.0 - (left_counts**2).sum(axis=1) / n_left**2
    gini_right = 1.0 - (right_counts**2).sum(axis=1) / n_right**2
    weighted = (n_left * gini_left + n_right * gini_right) / n
    best = int(np.argmin(weighted))
    pos = boundaries[best]
    return float(weighted[best]), float((xs_sorted[pos] + xs_sorted[pos + 1]) / 2.0)


def _sse_best_threshold(xs: np.ndarray, y: np.ndarray) -> tuple[float, float] | None:
    order = np.argsort(xs, kind="stable")
    xs_sorted = xs[order]
    boundaries = np.flatnonzero(xs_sorted[:-1] < xs_sorted[1:])
    if boundaries.size == 0:
        return None
    ys = y[order]
    cum = np.cumsum(ys)
    cum2 = np.cumsum(ys**2)
    n = len(xs)
    n_left = boundaries + 1
    n_right = n - n_left
    sum_l = cum[boundaries]
    sum2_l = cum2[boundaries]
    sum_r = cum[-1] - sum_l
    sum2_r = cum2[-1] - sum2_l
    sse = (sum2_l - sum_l**2 / n_left) + (sum2_r - sum_r**2 / n_right)
    best = int(np.argmin(sse))
    pos = boundaries[best]
    return float(sse[best]), float((xs_sorted[pos] + xs_sorted[pos + 1]) / 2.0)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    task: str,
    n_classes: int = 0,
    max_depth: int,
    max_features: int | None,
    rng: np.random.Generator,
    min_samples_split: int = 2,
    leaf_fn: Callable[[np.ndarray], float] | None = None,
) -> DecisionTree:
    """Grow one tree; `task` is "classification" or "regression".

    `max_features` limits how many features each split considers (drawn
    without replacement). `leaf_fn` maps the sample indices of a regression
    leaf to its stored value; by default the mean target.
    """
    n, n_feat = X.shape
    tree = DecisionTree()
    onehot = None
    if task == "classification":
        onehot = np.eye(n_classes, dtype=np.float64)[y]

    def leaf_value(idx: np.ndarray) -> list[float]:
        if task == "classification":
            counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
            return list(counts / counts.sum())
        if leaf_fn is not None:
            return [float(leaf_fn(idx))]
        return [float(y[idx].mean())]

    def build(idx: np.ndarray, depth: int) -> int:
        node = tree._add_node()
        pure = task == "classification" and len(np.unique(y[idx])) == 1
        if depth >= max_depth or len(idx) < min_samples_split or pure:
            tree.value[node] = leaf_value(idx)
            return node
        if max_features is not None and max_features < n_feat:
            feats = rng.choice(n_feat, size=max_features, replace=False)
        else:
            feats = np.arange(n_feat)
        best: tuple[float, int, float] | None = None
        for f in feats:
            xs = X[idx, f]
            if task == "classification":
                found = _gini_best_threshold(xs, onehot[idx])
            else:
                found = _sse_best_threshold(xs, y[idx])
            if found is None:
                continue
            score, thr = found
            if best is None or score < best[0]:
                best = (score, int(f), thr)
        if best is None:
            tree.value[node] = leaf_value(idx)
            return node
        _, f, thr = best
        goes_left = X[idx, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = build(idx[goes_left], depth + 1)
        tree.right[node] = build(idx[~goes_left], depth + 1)
        return node

    build(np.arange(n), 0)
    return tree


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_trees: int,
    max_depth: int,
    max_features: int,
    seed: int,
) -> list[DecisionTree]:
    """Bootstrap-aggregated classification trees with per-split feature draws."""
    trees = []
    for seq in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(seq)
        boot = rng.integers(0, len(X), size=len(X))
        trees.append(
            grow_tree(
                X[boot],
                y[boot],
                task="classification",
                n_classes=n_classes,
                max_depth=max_depth,
                max_features=max_features,
                rng=rng,
            )
        )
    return trees


def forest_vote_proba(trees: list[DecisionTree], X: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-class vote fractions; each tree votes its leaf's majority class."""
    votes = np.zeros((len(X), n_classes), dtype=np.float64)
    for tree in trees:
        dist = tree.predict_value(X)
        winners = np.argmax(dist, axis=1)
        votes[np.arange(len(X)), winners] += 1.0
    return votes / len(trees)


def fit_boosted(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_rounds: int,
    max_depth: int,
    learning_rate: float,
    seed: int,
) -> list[list[DecisionTree]]:
    """Multiclass gradient boosting on the softmax cross-entropy objective.

    Each round fits one regression tree per class to the residuals
    (one-hot minus predicted probability); leaf values take the usual
    Newton step scaled by (K-1)/K.
    """
    n, _ = X.shape
    onehot = np.eye(n_classes, dtype=np.float64)[y]
    F = np.zeros((n, n_classes), dtype=np.float64)
    rounds: list[list[DecisionTree]] = []
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    k_factor = (n_classes - 1) / n_classes if n_classes > 1 else 1.0

    for _ in range(n_rounds):
        expF = np.exp(F - F.max(axis=1, keepdims=True))
        P = expF / expF.sum(axis=1, keepdims=True)
        round_trees: list[DecisionTree] = []
        for k in range(n_classes):
            residual = onehot[:, k] - P[:, k]

            def newton_leaf(idx: np.ndarray, residual=residual) -> float:
                num = residual[idx].sum()
                den = (np.abs(residual[idx]) * (1.0 - np.abs(residual[idx]))).sum()
                if den < 1e-12:
                    return 0.0
                return k_factor * num / den

            tree = grow_tree(
                X,
                residual,
                task="regression",
                max_depth=max_depth,
                max_features=None,
                rng=rng,
                leaf_fn=newton_leaf,
            )
            F[:, k] += learning_rate * tree.predict_value(X)[:, 0]
            round_trees.append(tree)
        rounds.append(round_trees)
    return rounds


def boosted_proba(
    rounds: list[list[DecisionTree]], X: np.ndarray, n_classes: int, learning_rate: float
) -> np.ndarray:
    F = np.zeros((len(X), n_classes), dtype=np.float64)
    for round_trees in rounds:
        for k, tree in enumerate(round_trees):
            F[:, k] += learning_rate * tree.predict_value(X)[:, 0]
    expF = np.exp(F - F.max(axis=1, keepdims=True))
    return expF / expF.sum(axis=1, keepdims=True)
