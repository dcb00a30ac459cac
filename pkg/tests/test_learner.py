import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eilearn.data import Attribute, Dataset, Instance, Schema
from eilearn.learner import (
    CategoricalSplit,
    Leaf,
    LearnerError,
    NumericSplit,
    TreeParams,
    entropy,
    gain_ratio,
    information_gain,
    predict,
    predict_many,
    split_information,
    train_tree,
    tree_depth,
)

from conftest import numeric_dataset

XOR_ROWS = [[0, 0], [0, 1], [1, 0], [1, 1]]
XOR_LABELS = [0, 1, 1, 0]


def xor_separable_by_depth2_threshold_tree():
    """Oracle: brute force over root attribute/threshold and child splits."""
    cuts = [0.5]
    for a, t in itertools.product(range(2), cuts):
        ok = True
        for side in (lambda v: v <= t, lambda v: v > t):
            idx = [i for i, r in enumerate(XOR_ROWS) if side(r[a])]
            labels = {XOR_LABELS[i] for i in idx}
            if len(labels) <= 1:
                continue
            b = 1 - a
            sub_ok = all(
                len({XOR_LABELS[i] for i in idx if cmp(XOR_ROWS[i][b])}) <= 1
                for cmp in (lambda v: v <= 0.5, lambda v: v > 0.5)
            )
            ok &= sub_ok
        if ok:
            return True
    return False


def test_xor_oracle():
    assert xor_separable_by_depth2_threshold_tree()


def test_xor_fit_with_default_params():
    d = numeric_dataset(XOR_ROWS, XOR_LABELS)
    tree = train_tree(d)
    assert [predict(tree, x, d.schema) for x in d] == XOR_LABELS
    assert tree_depth(tree) == 2


def test_pure_data_gives_single_leaf():
    d = numeric_dataset([[1], [2], [3]], [1, 1, 1])
    tree = train_tree(d)
    assert isinstance(tree, Leaf)
    assert tree.predicted == 1 and tree.class_counts == (0, 3)


def test_single_instance_leaf():
    d = numeric_dataset([[4.0, 2.0]], [1])
    assert train_tree(d) == Leaf((0, 1))


def test_empty_data_rejected():
    d = numeric_dataset([[1]], [0])[:0]
    with pytest.raises(LearnerError):
        train_tree(d)


def test_leaf_tie_goes_to_lowest_class():
    assert Leaf((2, 2)).predicted == 0


def test_leaf_only_tree_predicts_constant():
    d = numeric_dataset([[1], [2]], [1, 1])
    tree = train_tree(d)
    other = Instance((99.0,), 0)
    assert predict(tree, other, d.schema) == 1


def test_numeric_threshold_is_midpoint_between_observed_values():
    d = numeric_dataset([[1], [2], [4], [8]], [0, 0, 1, 1])
    tree = train_tree(d)
    assert isinstance(tree, NumericSplit)
    assert tree.threshold == 3.0


def test_max_depth_limits_tree():
    d = numeric_dataset(XOR_ROWS, XOR_LABELS)
    tree = train_tree(d, TreeParams(max_depth=1))
    assert tree_depth(tree) == 1


def test_min_leaf_stops_small_nodes():
    d = numeric_dataset([[1], [2], [3]], [0, 1, 0])
    assert isinstance(train_tree(d, TreeParams(min_leaf=4)), Leaf)


def test_params_validation():
    with pytest.raises(LearnerError):
        TreeParams(min_leaf=0)
    with pytest.raises(LearnerError):
        TreeParams(max_depth=0)


def categorical_dataset():
    s = Schema((Attribute("colour", ("red", "green", "blue")), Attribute("n")), "y", ("p", "q"))
    rows = [("red", 1.0, 0), ("red", 2.0, 0), ("red", 3.0, 0), ("green", 1.0, 1),
            ("green", 5.0, 1)]
    return Dataset(s, tuple(Instance((c, v), l) for c, v, l in rows))


def test_categorical_multiway_split_and_fallback():
    d = categorical_dataset()
    tree = train_tree(d)
    assert isinstance(tree, CategoricalSplit)
    assert tree.attribute == 0
    assert [c for c, _ in tree.branches] == [0, 1]
    # 'blue' never reached this node: routed to the largest branch, 'red'
    assert tree.fallback == 0
    assert predict(tree, Instance(("blue", 1.0), 0), d.schema) == 0
    assert predict(tree, Instance(("mauve", 1.0), 0), d.schema) == 0


def test_fallback_tie_prefers_first_category():
    s = Schema((Attribute("c", ("u", "v", "w")),), "y", ("p", "q"))
    d = Dataset(s, (Instance(("v",), 1), Instance(("u",), 0)))
    tree = train_tree(d)
    assert tree.fallback == 0


def test_predict_schema_mismatch():
    d = numeric_dataset(XOR_ROWS, XOR_LABELS)
    with pytest.raises(LearnerError):
        predict(train_tree(d), Instance((1.0,), 0), d.schema)


def test_split_ties_break_on_attribute_index():
    # both attributes separate the classes perfectly
    d = numeric_dataset([[0, 0], [1, 1]], [0, 1])
    tree = train_tree(d)
    assert tree.attribute == 0


# entropy / gain ratio


def test_entropy_analytic():
    assert entropy([5, 5]) == pytest.approx(1.0, abs=1e-12)
    assert entropy([10, 0]) == pytest.approx(0.0, abs=1e-12)
    assert entropy([1, 1, 1, 1]) == pytest.approx(2.0, abs=1e-12)


def test_perfect_split_gain_ratio():
    parent, children = [5, 5], [[5, 0], [0, 5]]
    assert information_gain(parent, children) == pytest.approx(1.0, abs=1e-12)
    assert split_information([5, 5]) == pytest.approx(1.0, abs=1e-12)
    assert gain_ratio(parent, children) == pytest.approx(1.0, abs=1e-12)


def test_entropy_errors():
    with pytest.raises(LearnerError):
        entropy([0, 0])
    with pytest.raises(LearnerError):
        entropy([-1, 2])


@given(st.lists(st.integers(0, 50), min_size=2, max_size=5).filter(lambda c: sum(c) > 0))
def test_entropy_bounds(counts):
    h = entropy(counts)
    assert 0.0 <= h <= math.log2(len(counts)) + 1e-12


# consistent data is fit exactly


@st.composite
def consistent_datasets(draw):
    n = draw(st.integers(1, 30))
    d = draw(st.integers(1, 4))
    kinds = draw(st.lists(st.booleans(), min_size=d, max_size=d))
    rows = {}
    for _ in range(n):
        row = tuple(
            float(draw(st.integers(0, 4))) if numeric else draw(st.sampled_from("abc"))
            for numeric in kinds
        )
        rows.setdefault(row, draw(st.integers(0, 2)))
    attrs = tuple(
        Attribute(f"a{j}") if numeric else Attribute(f"a{j}", ("a", "b", "c"))
        for j, numeric in enumerate(kinds)
    )
    schema = Schema(attrs, "y", ("p", "q", "r"))
    return Dataset(schema, tuple(Instance(r, l) for r, l in rows.items()))


@settings(max_examples=100, deadline=None)
@given(consistent_datasets())
def test_consistent_data_training_accuracy_is_perfect(d):
    tree = train_tree(d)
    assert np.array_equal(predict_many(tree, d), d.labels)
    # predict is deterministic and agrees with the batch path
    assert [predict(tree, x, d.schema) for x in d] == predict_many(tree, d).tolist()


def _check_structure(node, x, y, n_classes):
    counts = tuple(np.bincount(y, minlength=n_classes).tolist())
    if isinstance(node, Leaf):
        assert node.class_counts == counts
        return
    assert len(node.children) >= 2
    col = x[:, node.attribute]
    if isinstance(node, NumericSplit):
        observed = np.unique(col)
        assert observed.min() < node.threshold < observed.max()
        assert not np.any(observed == node.threshold)
        masks = [col <= node.threshold, col > node.threshold]
        for child, mask in zip(node.children, masks):
            _check_structure(child, x[mask], y[mask], n_classes)
    else:
        for cat, child in node.branches:
            mask = col == cat
            _check_structure(child, x[mask], y[mask], n_classes)


@settings(max_examples=50, deadline=None)
@given(consistent_datasets())
def test_tree_structure_invariants(d):
    _check_structure(train_tree(d), d.codes(), d.labels, len(d.schema.classes))
