"""Random forest regression on axis-aligned variance-reduction trees.

Each tree sees a bootstrap sample (optional) and considers a random subset of
ceil(d/3) features per node; if none of those admit a valid split the search
keeps inspecting further features, so a fully grown single tree reproduces
its training targets exactly on rows with distinct features.  Deterministic
for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split_for_feature(x: np.ndarray, y: np.ndarray):
    """(sse, threshold) of the best binary split on one feature, or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    distinct = np.flatnonzero(np.diff(xs) > 0)
    if len(distinct) == 0:
        return None
    n = len(ys)
    csum = np.cumsum(ys)
    csq = np.cumsum(ys * ys)
    total_sum = csum[-1]
    total_sq = csq[-1]
    nl = distinct + 1
    nr = n - nl
    sum_l = csum[distinct]
    sse = (total_sq - (sum_l ** 2) / nl - ((total_sum - sum_l) ** 2) / nr)
    k = int(np.argmin(sse))
    cut = distinct[k]
    threshold = (xs[cut] + xs[cut + 1]) / 2.0
    return float(sse[k]), threshold


def _grow(X: np.ndarray, y: np.ndarray, idx: np.ndarray, depth: int,
          max_depth: int | None, mtry: int, rng: np.random.Generator) -> _Node:
    node = _Node(value=float(y[idx].mean()))
    if len(idx) < 2 or (max_depth is not None and depth >= max_depth):
        return node
    if np.ptp(y[idx]) == 0.0:
        return node

    best = None
    inspected_with_split = 0
    for f in rng.permutation(X.shape[1]):
        found = _best_split_for_feature(X[idx, f], y[idx])
        if found is None:
            continue
        inspected_with_split += 1
        sse, threshold = found
        if best is None or sse < best[0]:
            best = (sse, int(f), threshold)
        if inspected_with_split >= mtry:
            break
    if best is None:
        return node

    _, f, threshold = best
    mask = X[idx, f] <= threshold
    node.feature = f
    node.threshold = threshold
    node.left = _grow(X, y, idx[mask], depth + 1, max_depth, mtry, rng)
    node.right = _grow(X, y, idx[~mask], depth + 1, max_depth, mtry, rng)
    return node


def _predict_tree(node: _Node, row: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.value


@dataclass
class RfrModel:
    trees: list[_Node]
    n_trees: int
    max_depth: int | None
    seed: int
    bootstrap: bool

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros(len(X))
        for tree in self.trees:
            out += [_predict_tree(tree, row) for row in X]
        return out / len(self.trees)


def fit_rfr(X, y, n_trees: int = 100, max_depth: int | None = None,
            seed: int = 0, bootstrap: bool = True) -> RfrModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D and aligned with y")
    if len(y) < 2:
        raise ValueError("need at least 2 rows")
    if n_trees < 1:
        raise ValueError("need at least one tree")

    mtry = max(1, ceil(X.shape[1] / 3))
    streams = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        idx = rng.integers(0, len(y), len(y)) if bootstrap else np.arange(len(y))
        trees.append(_grow(X, y, np.asarray(idx), 0, max_depth, mtry, rng))
    return RfrModel(trees=trees, n_trees=n_trees, max_depth=max_depth,
                    seed=seed, bootstrap=bootstrap)
