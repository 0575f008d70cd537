"""Random forest of class-weighted Gini CART trees.

Each tree sees a bootstrap sample of size n and considers ``floor(sqrt(d))``
randomly drawn features per split (more are drawn only when none of those
admits a split). Nodes split until pure, until the depth cap, or until no
feature has two distinct values. Tree ``t`` draws from
``default_rng([seed, t])`` so results do not depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class Tree:
    """Flat binary tree; leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, 2) weighted class distribution, rows sum to 1
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        for _ in range(self.max_depth):
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, f, 0)] <= self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _best_split(X, wy, feats):
    """Lowest weighted child impurity over ``feats``; None if no feature varies.

    ``wy`` holds per-row weighted class masses (m x 2). Child impurity is
    ``W_l * gini_l + W_r * gini_r = W_l - |c_l|^2 / W_l + W_r - |c_r|^2 / W_r``.
    """
    cols = X[:, feats]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    cum = np.cumsum(wy[order], axis=0)  # (m, f, 2)
    total = cum[-1]
    left = cum[:-1]
    right = total[None] - left
    wl = left.sum(axis=2)
    wr = right.sum(axis=2)
    valid = (xs[1:] > xs[:-1]) & (wl > 0) & (wr > 0)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        child = wl - (left**2).sum(axis=2) / wl + wr - (right**2).sum(axis=2) / wr
    child = np.where(valid, child, np.inf)
    # first minimum in (feature draw order, threshold position)
    flat = int(np.argmin(child.T))
    j, i = divmod(flat, child.shape[0])
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return feats[j], float(thr)


def fit_tree(X, y, sample_weight, depth: int, max_features: int, rng) -> Tree:
    n, d = X.shape
    wy = np.zeros((n, 2))
    wy[np.arange(n), y] = sample_weight
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        mass = wy[idx].sum(axis=0)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(mass / mass.sum())
        return len(feature) - 1, mass

    root, mass = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0, mass)]
    while stack:
        node, idx, level, mass = stack.pop()
        if level >= depth or idx.size < 2 or np.count_nonzero(mass) < 2:
            continue
        perm = rng.permutation(d)
        split = None
        for s in range(0, d, max_features):
            split = _best_split(X[idx], wy[idx], perm[s : s + max_features])
            if split is not None:
                break
        if split is None:
            continue
        f, thr = split
        go_left = X[idx, f] <= thr
        li, lm = new_node(idx[go_left])
        ri, rm = new_node(idx[~go_left])
        feature[node], threshold[node], left[node], right[node] = int(f), thr, li, ri
        stack.append((ri, idx[~go_left], level + 1, rm))
        stack.append((li, idx[go_left], level + 1, lm))
    return Tree(
        np.asarray(feature, dtype=np.intp),
        np.asarray(threshold),
        np.asarray(left, dtype=np.intp),
        np.asarray(right, dtype=np.intp),
        np.asarray(value),
        depth,
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    n_features: int
    n_estimators: int
    depth: int
    seed: int
    weights: np.ndarray
    kind: str = "random_forest"

    @property
    def hyperparameters(self) -> dict:
        return {"n_estimators": self.n_estimators, "depth": self.depth}

    def predict_proba(self, test) -> np.ndarray:
        return rf_predict(self, test)


def _one_tree(X, y, cw, depth, max_features, seed, t):
    rng = np.random.default_rng([seed, t])
    n = X.shape[0]
    counts = np.bincount(rng.integers(0, n, n), minlength=n)
    used = np.flatnonzero(counts)
    return fit_tree(X[used], y[used], counts[used] * cw[y[used]], depth, max_features, rng)


def rf_fit(train, labels, n_estimators: int = 100, depth: int = 10, weights=None, seed: int = 0, n_jobs: int = 1) -> ForestModel:
    """Fit a bagged forest; ``weights`` are per-class Gini weights."""
    X = np.asarray(train, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("empty training set")
    if y.shape != (X.shape[0],):
        raise ValidationError("one label per training row required")
    if n_estimators < 1 or depth < 1:
        raise ValidationError("estimators and depth must be at least 1")
    if not np.all(np.isfinite(X)):
        raise ValidationError("training features contain non-finite values")
    cw = np.ones(2) if weights is None else np.asarray(weights, dtype=np.float64)
    max_features = max(1, int(np.sqrt(X.shape[1])))
    args = (X, y, cw, depth, max_features, seed)
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            trees = tuple(ex.map(lambda t: _one_tree(*args, t), range(n_estimators)))
    else:
        trees = tuple(_one_tree(*args, t) for t in range(n_estimators))
    return ForestModel(trees, X.shape[1], n_estimators, depth, seed, cw)


def rf_predict(model: ForestModel, test) -> np.ndarray:
    """Mean of per-tree leaf class distributions."""
    X = np.asarray(test, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValidationError(f"expected {model.n_features} features, got {X.shape[-1] if X.ndim else 0}")
    acc = np.zeros((X.shape[0], 2))
    for tree in model.trees:
        acc += tree.predict_proba(X)
    p = acc / len(model.trees)
    return p / p.sum(axis=1, keepdims=True)
