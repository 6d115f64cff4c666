"""Random forest over binary sparse features.

Trees are CART-style with Gini impurity.  Because every feature is a
presence indicator, a split is just a feature index: samples lacking it
go left, samples having it go right.  Each tree is grown on a bootstrap
resample drawn from a Philox generator seeded with ``seed + tree_index``;
the same generator then draws the candidate features at every node, in
pre-order, uniformly without replacement from the features that are
neither absent from every sample at the node nor present in all of them.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .features import FeatureSpace

# decreases closer than this are ties; with integer counts distinct
# decreases are separated by far more than this
TIE_EPS = 1e-12
THREADS_ENV = "ESURF_THREADS"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 32
    min_leaf: int = 1
    features_per_split: int | None = None  # None means round(sqrt(D))
    seed: int = 0
    decision_threshold: float = 0.5

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("n_trees, max_depth and min_leaf must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be positive")
        if not 0 < self.decision_threshold < 1:
            raise ValueError("decision_threshold must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def split_size(self, n_features: int) -> int:
        if n_features == 0:
            return 0
        k = self.features_per_split
        if k is None:
            k = max(1, round(math.sqrt(n_features)))
        if k > n_features:
            raise ValueError(f"features_per_split={k} exceeds feature count {n_features}")
        return k


def gini(positive: int, total: int) -> float:
    """Binary Gini impurity ``2 p (1 - p)``; 0 for an empty node."""
    if positive < 0 or positive > total:
        raise ValueError(f"invalid counts positive={positive} total={total}")
    if total == 0:
        return 0.0
    return 2 * positive * (total - positive) / (total * total)


@dataclass
class Tree:
    """Nodes in pre-order.  ``feature[i] == -1`` marks a leaf.

    The absent-branch child of an internal node ``i`` is ``i + 1``; the
    present-branch child is ``right[i]``.
    """

    feature: np.ndarray
    right: np.ndarray
    positive: np.ndarray
    total: np.ndarray

    def __len__(self) -> int:
        return len(self.feature)

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def leaf_for(self, vec) -> int:
        present = set(int(v) for v in vec)
        i = 0
        while self.feature[i] >= 0:
            i = int(self.right[i]) if int(self.feature[i]) in present else i + 1
        return i

    def proba(self, vec) -> float:
        i = self.leaf_for(vec)
        return float(self.positive[i]) / float(self.total[i])

    def nested(self, i: int = 0):
        """Structural view: ``("leaf", pos, total)`` or ``(feature, absent, present)``."""
        if self.feature[i] < 0:
            return ("leaf", int(self.positive[i]), int(self.total[i]))
        return (int(self.feature[i]), self.nested(i + 1), self.nested(int(self.right[i])))

    def max_feature(self) -> int:
        return int(self.feature.max()) if len(self.feature) else -1

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(np.array_equal(getattr(self, a), getattr(other, a))
                   for a in ("feature", "right", "positive", "total"))


@dataclass
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    n_features: int
    space: FeatureSpace | None = None

    def __post_init__(self):
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        for t in self.trees:
            if t.max_feature() >= self.n_features:
                raise ValueError("tree tests a feature outside the feature space")


class _Matrix:
    """Row-compressed binary matrix built from sorted index vectors."""

    def __init__(self, vectors: Sequence[Sequence[int]], n_features: int):
        lens = np.fromiter((len(v) for v in vectors), dtype=np.int64, count=len(vectors))
        self.indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum(lens, out=self.indptr[1:])
        if len(vectors) and self.indptr[-1]:
            self.indices = np.concatenate([np.asarray(v, dtype=np.int64) for v in vectors])
        else:
            self.indices = np.zeros(0, dtype=np.int64)
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n_features):
            raise ValueError("feature index outside [0, n_features)")
        self.n_rows = len(vectors)
        self.n_features = n_features

    def gather(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (owner position in ``rows``, feature) pairs."""
        starts = self.indptr[rows]
        lens = self.indptr[rows + 1] - starts
        n = int(lens.sum())
        offsets = np.repeat(starts - (np.cumsum(lens) - lens), lens)
        feats = self.indices[offsets + np.arange(n)]
        owner = np.repeat(np.arange(len(rows)), lens)
        return owner, feats


def _infer_n_features(vectors: Iterable[Sequence[int]]) -> int:
    return 1 + max((int(v[-1]) for v in vectors if len(v)), default=-1)


class _Grower:
    def __init__(self, X: _Matrix, y: np.ndarray, params: ForestParams, rng: np.random.Generator):
        self.X = X
        self.y = y.astype(np.float64)
        self.params = params
        self.rng = rng
        self.k = params.split_size(X.n_features)
        self.slot = np.full(X.n_features, -1, dtype=np.int64)
        self.feature: list[int] = []
        self.right: list[int] = []
        self.positive: list[int] = []
        self.total: list[int] = []

    def split(self, rows: np.ndarray, w: np.ndarray, candidates: np.ndarray, gathered=None):
        """Best (feature, decrease, present-mask) over ``candidates``, or None."""
        min_leaf = self.params.min_leaf
        wy = w * self.y[rows]
        total = w.sum()
        pos = wy.sum()
        k = len(candidates)
        owner, feats = gathered if gathered is not None else self.X.gather(rows)
        self.slot[candidates] = np.arange(k)
        try:
            slot = self.slot[feats]
        finally:
            self.slot[candidates] = -1
        hit = slot >= 0
        owner, slot = owner[hit], slot[hit]
        n_in = np.bincount(slot, weights=w[owner], minlength=k)
        p_in = np.bincount(slot, weights=wy[owner], minlength=k)
        n_out = total - n_in
        p_out = pos - p_in
        with np.errstate(divide="ignore", invalid="ignore"):
            g_in = np.where(n_in > 0, p_in * (n_in - p_in) / n_in, 0.0)
            g_out = np.where(n_out > 0, p_out * (n_out - p_out) / n_out, 0.0)
        children = 2 * (g_in + g_out) / total
        decrease = 2 * pos * (total - pos) / (total * total) - children
        ok = (n_in >= min_leaf) & (n_out >= min_leaf) & (decrease > TIE_EPS)
        if not ok.any():
            return None
        best = decrease[ok].max()
        tied = ok & (decrease >= best - TIE_EPS)
        j = int(np.flatnonzero(tied)[np.argmin(candidates[tied])])
        f = int(candidates[j])
        present = np.zeros(len(rows), dtype=bool)
        present[owner[slot == j]] = True
        return f, float(decrease[j]), present

    def _leaf(self, pos: int, total: int):
        self.feature.append(-1)
        self.right.append(-1)
        self.positive.append(pos)
        self.total.append(total)

    def grow(self, rows: np.ndarray, w: np.ndarray):
        """Build the subtree for ``rows`` in pre-order, absent branch first."""
        p = self.params
        # (rows, weights, depth, parent whose present-branch this is)
        stack = [(rows, w, 0, -1)]
        while stack:
            rows, w, depth, parent = stack.pop()
            if parent >= 0:
                self.right[parent] = len(self.feature)
            total = int(w.sum())
            pos = int(round(float((w * self.y[rows]).sum())))
            if depth >= p.max_depth or pos == 0 or pos == total or total < 2 * p.min_leaf or self.k == 0:
                self._leaf(pos, total)
                continue
            # draw among features that vary within the node; constant ones
            # cannot split it
            gathered = self.X.gather(rows)
            seen = np.bincount(gathered[1], minlength=self.X.n_features)
            varying = np.flatnonzero((seen > 0) & (seen < len(rows)))
            if len(varying) == 0:
                self._leaf(pos, total)
                continue
            candidates = self.rng.choice(varying, size=min(self.k, len(varying)), replace=False)
            found = self.split(rows, w, candidates, gathered)
            if found is None:
                self._leaf(pos, total)
                continue
            f, _, present = found
            me = len(self.feature)
            self.feature.append(f)
            self.right.append(-1)
            self.positive.append(pos)
            self.total.append(total)
            stack.append((rows[present], w[present], depth + 1, me))
            stack.append((rows[~present], w[~present], depth + 1, -1))

    def tree(self) -> Tree:
        return Tree(np.array(self.feature, dtype=np.int64), np.array(self.right, dtype=np.int64),
                    np.array(self.positive, dtype=np.int64), np.array(self.total, dtype=np.int64))


def _unpack(samples) -> tuple[list, np.ndarray]:
    vectors = [np.asarray(v, dtype=np.int64) for v, _ in samples]
    labels = np.array([bool(lab) for _, lab in samples], dtype=bool)
    return vectors, labels


def best_split(samples, candidate_features, min_leaf: int = 1, n_features: int | None = None):
    """Feature with the largest weighted-Gini decrease, as ``(feature, decrease)``.

    Ties go to the lowest feature index.  Returns None when no candidate
    gives a strictly positive decrease with both sides holding at least
    ``min_leaf`` samples.
    """
    vectors, labels = _unpack(samples)
    candidates = np.asarray(sorted(set(int(c) for c in candidate_features)), dtype=np.int64)
    if n_features is None:
        n_features = max(_infer_n_features(vectors), int(candidates.max(initial=-1)) + 1)
    if len(candidates) == 0:
        return None
    X = _Matrix(vectors, n_features)
    g = _Grower(X, labels, ForestParams(min_leaf=min_leaf, features_per_split=1), np.random.default_rng(0))
    rows = np.arange(len(vectors))
    found = g.split(rows, np.ones(len(rows)), candidates)
    if found is None:
        return None
    return found[0], found[1]


def tree_rng(seed: int, tree_index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed + tree_index))


def bootstrap(rng: np.random.Generator, n: int) -> np.ndarray:
    """Indices of a size-``n`` resample with replacement."""
    return rng.integers(0, n, size=n)


def _grow_weighted(X: _Matrix, y: np.ndarray, w: np.ndarray, params: ForestParams,
                   rng: np.random.Generator) -> Tree:
    rows = np.flatnonzero(w)
    g = _Grower(X, y, params, rng)
    g.grow(rows, w[rows].astype(np.float64))
    return g.tree()


def train_tree(samples, params: ForestParams, rng: np.random.Generator,
               n_features: int | None = None) -> Tree:
    """Grow one tree on ``samples`` (a list of ``(vector, label)``)."""
    if not samples:
        raise ValueError("cannot train a tree on no samples")
    vectors, labels = _unpack(samples)
    if n_features is None:
        n_features = _infer_n_features(vectors)
    X = _Matrix(vectors, n_features)
    return _grow_weighted(X, labels, np.ones(len(vectors)), params, rng)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def train_forest(samples, params: ForestParams, n_features: int | None = None,
                 space: FeatureSpace | None = None) -> ForestModel:
    """Bagged ensemble of ``params.n_trees`` trees.

    ``n_features`` defaults to the size of ``space`` when given, else to
    one past the largest index seen.
    """
    vectors, labels = _unpack(samples)
    if not labels.any() or labels.all():
        raise ValueError("training data must contain both classes")
    if n_features is None:
        n_features = len(space) if space is not None else _infer_n_features(vectors)
    params.split_size(n_features)
    X = _Matrix(vectors, n_features)
    n = len(vectors)

    def one(t: int) -> Tree:
        rng = tree_rng(params.seed, t)
        w = np.bincount(bootstrap(rng, n), minlength=n)
        return _grow_weighted(X, labels, w, params, rng)

    workers = min(thread_count(), params.n_trees)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(one, range(params.n_trees)))
    else:
        trees = [one(t) for t in range(params.n_trees)]
    return ForestModel(trees, params, n_features, space)


def predict_proba(model: ForestModel, vec) -> float:
    """Mean over trees of the positive fraction at the leaf ``vec`` reaches."""
    return sum(t.proba(vec) for t in model.trees) / len(model.trees)


def classify(model: ForestModel, vec) -> bool:
    return predict_proba(model, vec) > model.params.decision_threshold


def predict_proba_many(model: ForestModel, vectors: Sequence[Sequence[int]]) -> np.ndarray:
    """Vectorized ``predict_proba`` over many vectors."""
    m = len(vectors)
    if m == 0:
        return np.zeros(0)
    D = max(model.n_features, _infer_n_features(vectors), 1)
    X = _Matrix(vectors, D)
    rows = np.repeat(np.arange(m, dtype=np.int64), np.diff(X.indptr))
    keys = rows * D + X.indices  # globally sorted: rows ascending, indices sorted within rows
    acc = np.zeros(m)
    sample_ids = np.arange(m, dtype=np.int64)
    for t in model.trees:
        node = np.zeros(m, dtype=np.int64)
        active = t.feature[node] >= 0
        while active.any():
            ids = sample_ids[active]
            cur = node[ids]
            f = t.feature[cur]
            probe = ids * D + f
            pos = np.searchsorted(keys, probe)
            present = (pos < len(keys)) & (keys[np.minimum(pos, len(keys) - 1)] == probe)
            node[ids] = np.where(present, t.right[cur], cur + 1)
            active[ids] = t.feature[node[ids]] >= 0
        acc += t.positive[node] / t.total[node]
    return acc / len(model.trees)


def split_counts(model: ForestModel) -> np.ndarray:
    """How many internal nodes across the forest test each feature."""
    counts = np.zeros(model.n_features, dtype=np.int64)
    for t in model.trees:
        f = t.feature[t.feature >= 0]
        counts += np.bincount(f, minlength=model.n_features)
    return counts
