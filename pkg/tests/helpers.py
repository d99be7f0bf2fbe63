"""Hand-built trees, forests, and reference oracles shared across test files."""

import numpy as np

from acsdx.forest import ForestClassifier, Tree


def leaf_tree(pos: int, neg: int) -> Tree:
    """One leaf, nothing else."""
    return Tree(
        is_leaf=np.array([True]),
        feature=np.array([-1], dtype=np.int16),
        threshold=np.array([0.0], dtype=np.float32),
        left=np.array([-1], dtype=np.int32),
        right=np.array([-1], dtype=np.int32),
        pos=np.array([pos], dtype=np.int64),
        neg=np.array([neg], dtype=np.int64),
    )


def stump_tree(feature: int, threshold: float, left=(0, 1), right=(1, 0)) -> Tree:
    """Root split with two leaves; left/right give (pos, neg) counts."""
    return Tree(
        is_leaf=np.array([False, True, True]),
        feature=np.array([feature, -1, -1], dtype=np.int16),
        threshold=np.array([threshold, 0.0, 0.0], dtype=np.float32),
        left=np.array([1, -1, -1], dtype=np.int32),
        right=np.array([2, -1, -1], dtype=np.int32),
        pos=np.array([0, left[0], right[0]], dtype=np.int64),
        neg=np.array([0, left[1], right[1]], dtype=np.int64),
    )


def hand_forest(trees, n_features: int = 5, max_depth: int = 5, seed: int = 0) -> ForestClassifier:
    """Wrap prebuilt trees in a fitted-looking classifier."""
    forest = ForestClassifier(n_trees=len(trees), max_depth=max_depth, seed=seed)
    forest.trees_ = tuple(trees)
    forest.n_features_in_ = n_features
    return forest


def vote_forest(n_pos: int, n_neg: int, n_features: int = 5) -> ForestClassifier:
    """Forest of single-leaf trees casting a fixed vote split."""
    trees = [leaf_tree(1, 0) for _ in range(n_pos)]
    trees += [leaf_tree(0, 1) for _ in range(n_neg)]
    return hand_forest(trees, n_features=n_features, max_depth=1)


def brute_force_split(X, y, features):
    """Reference split search: try every midpoint, keep the lexicographic
    minimum of (weighted impurity, feature, threshold).

    Mirrors the library's arithmetic order exactly (children's Gini from
    p/n and q/n, then (nl*gl + nr*gr)/n, thresholds quantized to float32)
    so agreement can be asserted with ==, not approx. Returns that key
    tuple, or None when every feature is constant.
    """
    best = None
    n = len(y)
    for f in sorted(set(features)):
        vals = sorted({row[f] for row in X})
        for lo, hi in zip(vals, vals[1:]):
            thr = float(np.float32((lo + hi) / 2.0))
            pl = sum(1 for row, lab in zip(X, y) if row[f] < thr and lab)
            ql = sum(1 for row, lab in zip(X, y) if row[f] < thr and not lab)
            pr = sum(1 for row, lab in zip(X, y) if row[f] >= thr and lab)
            qr = sum(1 for row, lab in zip(X, y) if row[f] >= thr and not lab)
            nl, nr = float(pl + ql), float(pr + qr)
            if nl == 0 or nr == 0:
                continue
            a, b = pl / nl, ql / nl
            gl = 1.0 - a * a - b * b
            a, b = pr / nr, qr / nr
            gr = 1.0 - a * a - b * b
            key = ((nl * gl + nr * gr) / n, f, thr)
            if best is None or key < best:
                best = key
    return best
