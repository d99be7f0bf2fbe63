"""Random-forest classifier for small fixed-width sensor feature vectors.

Training is plain CART: Gini impurity, exhaustive threshold search at the
midpoints of consecutive distinct sorted feature values, bootstrap resampling
per tree, and a random feature subset per node. Every random draw comes from
the package's own splitmix64 generator with one substream per tree, so a
(data, params, seed) triple always produces the same model, byte for byte,
regardless of platform.

Prediction is majority voting. Leaf ties resolve to the positive class: for a
screening device the cheap error is the false alarm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateDataError
from .rng import SplitMix64, derive_seed
from .validation import (
    check_binary_labels,
    check_feature_matrix,
    check_is_fitted,
    check_probability_threshold,
)


def gini_impurity(pos: int, neg: int) -> float:
    """Gini impurity of a node holding pos/neg class counts."""
    if pos < 0 or neg < 0:
        raise ValueError("class counts cannot be negative")
    n = pos + neg
    if n == 0:
        raise DataError("empty node has no impurity")
    p = pos / n
    q = neg / n
    # grouped so the result is exactly symmetric in (pos, neg)
    return 1.0 - (p * p + q * q)


@dataclass(frozen=True)
class Split:
    """A candidate split: route left when value < threshold."""

    feature: int
    threshold: float
    weighted_impurity: float


def best_split(X, y, features) -> Split | None:
    """Lowest child-count-weighted Gini split over the candidate features.

    Thresholds are midpoints of consecutive distinct sorted values, quantized
    to float32 at selection time so a serialized tree routes identically to
    the in-memory one. Ties break toward the lowest feature index, then the
    lowest threshold. Returns None when every candidate feature is constant.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = len(y)
    if n == 0:
        raise DataError("cannot split an empty sample set")
    best = None
    for f in sorted({int(f) for f in features}):
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        labs = y[order].astype(np.int64)
        cuts = np.nonzero(vals[1:] != vals[:-1])[0]
        if cuts.size == 0:
            continue
        cum_pos = np.cumsum(labs)
        total_pos = float(cum_pos[-1])
        nl = (cuts + 1).astype(np.float64)
        nr = float(n) - nl
        pl = cum_pos[cuts].astype(np.float64)
        ql = nl - pl
        pr = total_pos - pl
        qr = nr - pr
        a = pl / nl
        b = ql / nl
        gl = 1.0 - a * a - b * b
        a = pr / nr
        b = qr / nr
        gr = 1.0 - a * a - b * b
        score = (nl * gl + nr * gr) / n
        k = int(np.argmin(score))  # first minimum = lowest threshold
        if best is None or float(score[k]) < best.weighted_impurity:
            cut = int(cuts[k])
            thr = float(np.float32((vals[cut] + vals[cut + 1]) / 2.0))
            best = Split(f, thr, float(score[k]))
    return best


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat preorder decision tree as parallel arrays.

    Internal nodes route a sample left when sample[feature] < threshold.
    Leaves carry the training class counts; feature, left and right hold -1
    there. Children always sit at higher indices than their parent.
    """

    is_leaf: np.ndarray    # bool
    feature: np.ndarray    # int16, -1 at leaves
    threshold: np.ndarray  # float32, 0 at leaves
    left: np.ndarray       # int32, -1 at leaves
    right: np.ndarray      # int32, -1 at leaves
    pos: np.ndarray        # int64
    neg: np.ndarray        # int64

    def __len__(self) -> int:
        return len(self.is_leaf)

    def depth(self) -> int:
        """Longest root-to-leaf edge count."""
        depth = 0
        stack = [(0, 0)]
        while stack:
            i, d = stack.pop()
            if self.is_leaf[i]:
                depth = max(depth, d)
            else:
                stack.append((int(self.left[i]), d + 1))
                stack.append((int(self.right[i]), d + 1))
        return depth

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Vectorized leaf routing; returns one 0/1 vote per row."""
        idx = np.zeros(len(X), dtype=np.int64)
        pending = ~self.is_leaf[idx]
        while pending.any():
            rows = np.nonzero(pending)[0]
            cur = idx[rows]
            go_left = X[rows, self.feature[cur]] < self.threshold[cur]
            nxt = np.where(go_left, self.left[cur], self.right[cur]).astype(np.int64)
            idx[rows] = nxt
            pending[rows] = ~self.is_leaf[nxt]
        return (self.pos[idx] >= self.neg[idx]).astype(np.uint8)


def trees_equal(a: Tree, b: Tree) -> bool:
    return (
        len(a) == len(b)
        and np.array_equal(a.is_leaf, b.is_leaf)
        and np.array_equal(a.feature, b.feature)
        and np.array_equal(a.threshold, b.threshold)
        and np.array_equal(a.left, b.left)
        and np.array_equal(a.right, b.right)
        and np.array_equal(a.pos, b.pos)
        and np.array_equal(a.neg, b.neg)
    )


class _TreeBuilder:
    """Accumulates nodes in preorder and freezes them into a Tree."""

    def __init__(self):
        self.is_leaf, self.feature, self.threshold = [], [], []
        self.left, self.right, self.pos, self.neg = [], [], [], []

    def add_leaf(self, pos: int, neg: int) -> int:
        self.is_leaf.append(True)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.pos.append(pos)
        self.neg.append(neg)
        return len(self.is_leaf) - 1

    def add_internal(self, split: Split) -> int:
        self.is_leaf.append(False)
        self.feature.append(split.feature)
        self.threshold.append(split.threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.pos.append(0)
        self.neg.append(0)
        return len(self.is_leaf) - 1

    def freeze(self) -> Tree:
        return Tree(
            is_leaf=np.asarray(self.is_leaf, dtype=bool),
            feature=np.asarray(self.feature, dtype=np.int16),
            threshold=np.asarray(self.threshold, dtype=np.float32),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            pos=np.asarray(self.pos, dtype=np.int64),
            neg=np.asarray(self.neg, dtype=np.int64),
        )


def _draw_features(rng: SplitMix64, n_features: int, k: int) -> list[int]:
    # partial Fisher-Yates: k distinct indices, without replacement
    pool = list(range(n_features))
    for i in range(k):
        j = i + rng.below(n_features - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def grow_tree(
    X,
    y,
    *,
    max_depth: int = 5,
    max_features: int | None = None,
    min_samples_split: int = 2,
    rng: SplitMix64,
) -> Tree:
    """Grow one CART tree on the given samples.

    A node becomes a leaf when it is pure, the depth cap is reached, it holds
    fewer than min_samples_split samples, or no candidate feature splits.
    """
    X = check_feature_matrix(X)
    y = check_binary_labels(y, len(X))
    if len(y) == 0:
        raise DataError("cannot grow a tree from an empty sample set")
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    if min_samples_split < 2:
        raise ValueError("min_samples_split must be at least 2")
    d = X.shape[1]
    k = d if max_features is None else int(max_features)
    if not 1 <= k <= d:
        raise ValueError(f"max_features must be in [1, {d}]")

    builder = _TreeBuilder()

    def build(Xn: np.ndarray, yn: np.ndarray, depth: int) -> int:
        pos = int(yn.sum())
        neg = len(yn) - pos
        if pos == 0 or neg == 0 or depth >= max_depth or len(yn) < min_samples_split:
            return builder.add_leaf(pos, neg)
        split = best_split(Xn, yn, _draw_features(rng, d, k))
        if split is None:
            return builder.add_leaf(pos, neg)
        mask = Xn[:, split.feature] < split.threshold
        n_left = int(mask.sum())
        # float32 quantization can land the midpoint on a bound when the two
        # neighbors are adjacent representable values; bail out to a leaf
        if n_left == 0 or n_left == len(yn):
            return builder.add_leaf(pos, neg)
        node = builder.add_internal(split)
        left = build(Xn[mask], yn[mask], depth + 1)
        right = build(Xn[~mask], yn[~mask], depth + 1)
        builder.left[node] = left
        builder.right[node] = right
        return node

    build(X, y, 0)
    return builder.freeze()


def tree_predict(tree: Tree, values) -> int:
    """Route one feature vector to a leaf; majority class, ties positive."""
    i = 0
    while not tree.is_leaf[i]:
        f = int(tree.feature[i])
        i = int(tree.left[i]) if values[f] < tree.threshold[i] else int(tree.right[i])
    return 1 if tree.pos[i] >= tree.neg[i] else 0


def vote_fraction(forest: "ForestClassifier", values) -> float:
    """Fraction of trees voting positive for a single feature vector."""
    check_is_fitted(forest, "trees_")
    votes = sum(tree_predict(tree, values) for tree in forest.trees_)
    return votes / len(forest.trees_)


def _check_grown_tree(tree: Tree, max_depth: int, n_features: int) -> None:
    # structural invariants, re-checked after every training run
    n = len(tree)
    for i in range(n):
        if tree.is_leaf[i]:
            if tree.pos[i] + tree.neg[i] < 1:
                raise RuntimeError("leaf with empty class counts")
        else:
            if not 0 <= tree.feature[i] < n_features:
                raise RuntimeError("internal node references a bad feature")
            if not (i < tree.left[i] < n and i < tree.right[i] < n):
                raise RuntimeError("internal node child indices out of order")
    if tree.depth() > max_depth:
        raise RuntimeError("grown tree exceeds the depth cap")


class ForestClassifier:
    """Bootstrap ensemble of CART trees with majority voting.

    The surface follows the familiar estimator conventions: fit / predict /
    predict_proba / score plus get_params / set_params, learned state on
    underscore-suffixed attributes. A fitted forest is immutable and safe to
    share across threads.

    Parameters
    ----------
    n_trees : ensemble size.
    max_depth : per-tree depth cap.
    max_features : features drawn (without replacement) per node.
    min_samples_split : nodes smaller than this become leaves.
    bootstrap : resample n rows with replacement per tree when True.
    seed : 64-bit training seed; tree t uses substream derive_seed(seed, t).
    """

    _PARAMS = ("n_trees", "max_depth", "max_features", "min_samples_split", "bootstrap", "seed")

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int = 5,
        max_features: int = 2,
        min_samples_split: int = 2,
        bootstrap: bool = True,
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees_ = None
        self.n_features_in_ = None

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={getattr(self, k)!r}" for k in self._PARAMS)
        return f"ForestClassifier({args})"

    def get_params(self, deep: bool = True) -> dict:
        return {k: getattr(self, k) for k in self._PARAMS}

    def set_params(self, **params) -> "ForestClassifier":
        for k, v in params.items():
            if k not in self._PARAMS:
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def _check_params(self, n_features: int) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if not 1 <= self.max_depth <= 255:
            raise ValueError("max_depth must be in [1, 255]")
        if not 1 <= self.max_features <= n_features:
            raise ValueError(f"max_features must be in [1, {n_features}]")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def fit(self, X, y) -> "ForestClassifier":
        X = check_feature_matrix(X)
        if len(X) == 0:
            raise DataError("training data is empty")
        y = check_binary_labels(y, len(X))
        self._check_params(X.shape[1])
        if int(y.min()) == int(y.max()):
            raise DegenerateDataError(
                "training data contains a single class; need both"
            )
        n = len(y)
        trees = []
        for t in range(self.n_trees):
            rng = SplitMix64(derive_seed(self.seed, t))
            if self.bootstrap:
                idx = np.fromiter(
                    (rng.below(n) for _ in range(n)), dtype=np.int64, count=n
                )
                Xt, yt = X[idx], y[idx]
            else:
                Xt, yt = X, y
            tree = grow_tree(
                Xt,
                yt,
                max_depth=self.max_depth,
                max_features=self.max_features,
                min_samples_split=self.min_samples_split,
                rng=rng,
            )
            _check_grown_tree(tree, self.max_depth, X.shape[1])
            trees.append(tree)
        self.trees_ = tuple(trees)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Positive-class vote fraction per row (not leaf-distribution averaging)."""
        check_is_fitted(self, "trees_")
        X = check_feature_matrix(X, self.n_features_in_)
        votes = np.zeros(len(X), dtype=np.int64)
        for tree in self.trees_:
            votes += tree.predict(X)
        return votes / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return classify(self, X)

    def score(self, X, y) -> float:
        y = check_binary_labels(y, len(np.asarray(y)))
        pred = self.predict(X)
        if len(pred) != len(y):
            raise ValueError("X and y length mismatch")
        return float((pred == y).mean())


def classify(forest: ForestClassifier, X, threshold: float = 0.5) -> np.ndarray:
    """Positive when the vote fraction reaches the threshold (inclusive)."""
    threshold = check_probability_threshold(threshold)
    proba = forest.predict_proba(X)
    return (proba >= threshold).astype(np.uint8)


def dump_tree(tree: Tree, feature_names: tuple[str, ...] | None = None) -> str:
    """Human-readable indented dump of one tree."""
    def name(f: int) -> str:
        return feature_names[f] if feature_names else f"x{f}"

    lines: list[str] = []

    def walk(i: int, indent: int) -> None:
        pad = "  " * indent
        if tree.is_leaf[i]:
            lines.append(f"{pad}[{i}] leaf pos={int(tree.pos[i])} neg={int(tree.neg[i])}")
        else:
            lines.append(f"{pad}[{i}] if {name(int(tree.feature[i]))} < {float(tree.threshold[i])!r}:")
            walk(int(tree.left[i]), indent + 1)
            lines.append(f"{pad}[{i}] else:")
            walk(int(tree.right[i]), indent + 1)

    walk(0, 0)
    return "\n".join(lines)
