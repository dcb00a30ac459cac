"""Gain-ratio decision tree used as the base learner.

Unpruned, C4.5-style induction: binary threshold splits on numeric
attributes, multiway splits on categorical ones, best split by gain ratio.
All tie-breaks are deterministic (attribute index, then threshold, then
class index).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import Dataset, Instance, Schema, encode_values

SPLIT_INFO_EPS = 1e-12


class LearnerError(ValueError):
    pass


@dataclass(frozen=True)
class TreeParams:
    min_leaf: int = 2
    max_depth: int | None = None
    min_gain: float = 1e-9

    def __post_init__(self):
        if self.min_leaf < 1:
            raise LearnerError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise LearnerError("max_depth must be >= 1 when given")


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple[int, ...]

    @property
    def predicted(self) -> int:
        return int(np.argmax(self.class_counts))  # first max = lowest class index

    @property
    def n(self) -> int:
        return sum(self.class_counts)


@dataclass(frozen=True)
class NumericSplit:
    attribute: int
    threshold: float
    le: "TreeNode"
    gt: "TreeNode"
    class_counts: tuple[int, ...]
    gain_ratio: float

    @property
    def children(self):
        return (self.le, self.gt)


@dataclass(frozen=True)
class CategoricalSplit:
    attribute: int
    branches: tuple[tuple[int, "TreeNode"], ...]  # (category index, child)
    fallback: int  # category index of the child used for unseen categories
    class_counts: tuple[int, ...]
    gain_ratio: float

    @property
    def children(self):
        return tuple(child for _, child in self.branches)

    def child_for(self, category: int) -> "TreeNode":
        for cat, child in self.branches:
            if cat == category:
                return child
        for cat, child in self.branches:
            if cat == self.fallback:
                return child
        raise AssertionError("fallback branch missing")


TreeNode = Union[Leaf, NumericSplit, CategoricalSplit]


def entropy(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise LearnerError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise LearnerError("entropy of all-zero counts is undefined")
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p))) + 0.0


def split_information(child_sizes) -> float:
    sizes = np.asarray(child_sizes, dtype=float)
    sizes = sizes[sizes > 0]
    p = sizes / sizes.sum()
    return float(-np.sum(p * np.log2(p))) + 0.0


def information_gain(parent_counts, child_counts) -> float:
    parent = np.asarray(parent_counts, dtype=float)
    n = parent.sum()
    rem = 0.0
    for c in child_counts:
        c = np.asarray(c, dtype=float)
        if c.sum() > 0:
            rem += c.sum() / n * entropy(c)
    return entropy(parent) - rem


def gain_ratio(parent_counts, child_counts) -> float:
    """Information gain divided by split information (0 when split info ~ 0)."""
    si = split_information([np.sum(c) for c in child_counts])
    if si < SPLIT_INFO_EPS:
        return 0.0
    return information_gain(parent_counts, child_counts) / si


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy of each row of a count matrix (rows with zero total give 0)."""
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / np.where(totals > 0, totals, 1), 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1)), 0.0)
    return -(p * logs).sum(axis=1)


@dataclass
class _Candidate:
    gain: float
    ratio: float
    attribute: int
    threshold: float | None  # None for categorical


def _numeric_candidates(col, y, n_classes, parent_h) -> list[_Candidate]:
    order = np.argsort(col, kind="stable")
    xs, ys = col[order], y[order]
    n = len(xs)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1
    left = np.cumsum(onehot, axis=0)[:-1]  # counts for cut after position i
    boundaries = np.flatnonzero(xs[1:] > xs[:-1])
    if len(boundaries) == 0:
        return []
    left = left[boundaries]
    right = onehot.sum(axis=0) - left
    nl = left.sum(axis=1)
    nr = n - nl
    gain = parent_h - (nl * _entropy_rows(left) + nr * _entropy_rows(right)) / n
    pl, pr = nl / n, nr / n
    si = -(pl * np.log2(pl) + pr * np.log2(pr))
    ratio = np.where(si >= SPLIT_INFO_EPS, gain / np.where(si > 0, si, 1), 0.0)
    thresholds = (xs[boundaries] + xs[boundaries + 1]) / 2.0
    out = []
    for g, r, s, t, lo, hi in zip(gain, ratio, si, thresholds, xs[boundaries], xs[boundaries + 1]):
        if s < SPLIT_INFO_EPS:
            continue
        # midpoint of adjacent floats can round onto an endpoint
        if not lo < t < hi:
            continue
        out.append(_Candidate(float(g), float(r), -1, float(t)))
    return out


def _categorical_candidate(col, y, n_classes, parent_h) -> _Candidate | None:
    cats = np.unique(col)
    if len(cats) < 2:
        return None
    n = len(y)
    counts = np.array([np.bincount(y[col == c], minlength=n_classes) for c in cats], dtype=float)
    sizes = counts.sum(axis=1)
    gain = parent_h - float((sizes * _entropy_rows(counts)).sum()) / n
    si = split_information(sizes)
    if si < SPLIT_INFO_EPS:
        return None
    return _Candidate(gain, gain / si, -1, None)


def _best_split(x, y, schema: Schema, params: TreeParams) -> _Candidate | None:
    n_classes = len(schema.classes)
    parent_h = entropy(np.bincount(y, minlength=n_classes))
    candidates = []
    for a, attr in enumerate(schema.attributes):
        col = x[:, a]
        if attr.is_numeric:
            cands = _numeric_candidates(col, y, n_classes, parent_h)
        else:
            c = _categorical_candidate(col, y, n_classes, parent_h)
            cands = [c] if c is not None else []
        for c in cands:
            c.attribute = a
            candidates.append(c)
    # With no informative split at an impure node, still split so consistent
    # data is fit exactly (XOR-like parity patterns have zero gain everywhere).
    pool = [c for c in candidates if c.gain >= params.min_gain] or candidates
    best = None
    for c in pool:
        # strict > keeps the earliest attribute / lowest threshold on ties
        if best is None or c.ratio > best.ratio:
            best = c
    return best


def _grow(x, y, schema: Schema, params: TreeParams, depth: int) -> TreeNode:
    n_classes = len(schema.classes)
    counts = tuple(int(c) for c in np.bincount(y, minlength=n_classes))
    leaf = Leaf(counts)
    if sum(1 for c in counts if c > 0) <= 1:
        return leaf
    if len(y) < params.min_leaf:
        return leaf
    if params.max_depth is not None and depth >= params.max_depth:
        return leaf
    split = _best_split(x, y, schema, params)
    if split is None:
        return leaf
    col = x[:, split.attribute]
    if split.threshold is not None:
        mask = col <= split.threshold
        return NumericSplit(
            attribute=split.attribute,
            threshold=split.threshold,
            le=_grow(x[mask], y[mask], schema, params, depth + 1),
            gt=_grow(x[~mask], y[~mask], schema, params, depth + 1),
            class_counts=counts,
            gain_ratio=split.ratio,
        )
    branches = []
    sizes = []
    for cat in np.unique(col):
        mask = col == cat
        branches.append((int(cat), _grow(x[mask], y[mask], schema, params, depth + 1)))
        sizes.append(int(mask.sum()))
    # largest branch; np.unique sorts categories so argmax favours schema order
    fallback = branches[int(np.argmax(sizes))][0]
    return CategoricalSplit(
        attribute=split.attribute,
        branches=tuple(branches),
        fallback=fallback,
        class_counts=counts,
        gain_ratio=split.ratio,
    )


def train_tree(data: Dataset, params: TreeParams | None = None) -> TreeNode:
    params = params or TreeParams()
    if len(data) == 0:
        raise LearnerError("cannot train on an empty dataset")
    return _grow(data.codes(), data.labels, data.schema, params, depth=0)


def _route(tree: TreeNode, row) -> int:
    node = tree
    while not isinstance(node, Leaf):
        v = row[node.attribute]
        if isinstance(node, NumericSplit):
            node = node.le if v <= node.threshold else node.gt
        else:
            node = node.child_for(int(v))
    return node.predicted


def predict(tree: TreeNode, x: Instance, schema: Schema) -> int:
    if len(x.values) != len(schema.attributes):
        raise LearnerError("instance does not match the training schema")
    return _route(tree, encode_values(schema, [x])[0])


def predict_many(tree: TreeNode, data: Dataset) -> np.ndarray:
    codes = data.codes()
    return np.fromiter((_route(tree, row) for row in codes), dtype=np.int64, count=len(data))


def tree_size(tree: TreeNode) -> int:
    if isinstance(tree, Leaf):
        return 1
    return 1 + sum(tree_size(c) for c in tree.children)


def tree_depth(tree: TreeNode) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(c) for c in tree.children)
