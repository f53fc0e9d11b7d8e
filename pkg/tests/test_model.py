import json
import math
import random

import pytest

from treevalues import (
    DimensionMismatchError,
    ModelFormatError,
    PathContext,
    TreeNode,
    dump_dataset,
    dump_model,
    load_dataset,
    load_model,
    predict,
)


def doc(trees, n=1, **kw):
    return json.dumps({"format_version": 1, "num_features": n,
                       "trees": trees, **kw})


def leaf(value, coverage):
    return {"kind": "leaf", "value": value, "coverage": coverage}


def split(feature, threshold, left, right, coverage):
    return {"kind": "split", "feature": feature, "threshold": threshold,
            "left": left, "right": right, "coverage": coverage}


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def test_load_single_leaf_tree():
    m = load_model(doc([{"nodes": [leaf(5.0, 10.0)]}]))
    assert m.num_trees == 1
    assert m.trees[0].num_leaves == 1
    assert m.trees[0].depth == 0
    assert m.aggregation == "average"


def test_load_consistent_coverages():
    m = load_model(doc([{"nodes": [split(0, 1.0, 1, 2, 100.0),
                                   leaf(1.0, 60.0), leaf(2.0, 40.0)]}]))
    assert m.trees[0].nodes[0].coverage == 100.0


def test_coverage_inconsistency_names_node():
    bad = doc([{"nodes": [split(0, 1.0, 1, 2, 100.0),
                          leaf(1.0, 60.0), leaf(2.0, 50.0)]}])
    with pytest.raises(ModelFormatError, match="node 0"):
        load_model(bad)


def test_feature_index_out_of_range():
    bad = doc([{"nodes": [split(3, 1.0, 1, 2, 10.0),
                          leaf(1.0, 5.0), leaf(2.0, 5.0)]}], n=2)
    with pytest.raises(ModelFormatError, match="out of range"):
        load_model(bad)


def test_orphan_node_rejected():
    bad = doc([{"nodes": [leaf(1.0, 5.0), leaf(2.0, 5.0)]}])
    with pytest.raises(ModelFormatError, match="orphan"):
        load_model(bad)


def test_shared_child_rejected():
    bad = doc([{"nodes": [split(0, 1.0, 1, 1, 10.0), leaf(1.0, 5.0)]}])
    with pytest.raises(ModelFormatError, match="multiple parents|coverage"):
        load_model(bad)


def test_root_as_child_rejected():
    bad = doc([{"nodes": [split(0, 1.0, 0, 1, 10.0), leaf(1.0, 5.0)]}])
    with pytest.raises(ModelFormatError, match="cycle"):
        load_model(bad)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format_version=2),
    lambda d: d.update(num_features=-1),
    lambda d: d.update(aggregation="median"),
    lambda d: d.update(trees=[]),
])
def test_bad_document_fields(mutate):
    d = {"format_version": 1, "num_features": 1,
         "trees": [{"nodes": [leaf(1.0, 1.0)]}]}
    mutate(d)
    with pytest.raises(ModelFormatError):
        load_model(json.dumps(d))


def test_bad_json():
    with pytest.raises(ModelFormatError, match="invalid JSON"):
        load_model("{not json")


@pytest.mark.parametrize("node", [
    {"kind": "leaf", "value": 1.0, "coverage": 0.0},
    {"kind": "leaf", "value": 1.0, "coverage": -3.0},
    {"kind": "leaf", "value": float("nan"), "coverage": 1.0},
    {"kind": "leaf", "coverage": 1.0},
    {"kind": "split", "feature": 0, "threshold": 1.0, "coverage": 1.0},
    {"kind": "wat", "coverage": 1.0},
])
def test_bad_nodes(node):
    with pytest.raises(ModelFormatError):
        load_model(doc([{"nodes": [node]}]))


def test_model_round_trip(two_feature_model):
    again = load_model(dump_model(two_feature_model))
    assert again == two_feature_model


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

def test_predict_single_leaf():
    m = load_model(doc([{"nodes": [leaf(5.0, 10.0)]}]))
    assert predict(m, [123.0]) == 5.0


@pytest.mark.parametrize("x,expected", [
    ([7.0], 20.0),
    ([5.0], 20.0),   # boundary goes right: the split rule is strict <
    ([4.999], 10.0),
])
def test_predict_split_rule(x, expected):
    m = load_model(doc([{"nodes": [split(0, 5.0, 1, 2, 4.0),
                                   leaf(10.0, 3.0), leaf(20.0, 1.0)]}]))
    assert predict(m, x) == expected


def test_predict_aggregations():
    trees = [{"nodes": [leaf(4.0, 1.0)]}, {"nodes": [leaf(8.0, 1.0)]}]
    avg = load_model(doc(trees))
    tot = load_model(doc(trees, aggregation="sum"))
    assert predict(avg, [0.0]) == 6.0
    assert predict(tot, [0.0]) == 12.0


def test_predict_dimension_mismatch(two_feature_model):
    with pytest.raises(DimensionMismatchError):
        predict(two_feature_model, [1.0])


# ---------------------------------------------------------------------------
# path context
# ---------------------------------------------------------------------------

def ctx_nodes():
    parent = TreeNode(coverage=4.0, feature=0, threshold=5.0, left=1, right=2)
    left = TreeNode(coverage=3.0, value=1.0)
    right = TreeNode(coverage=1.0, value=2.0)
    return parent, left, right


def test_descend_first_occurrence_inside():
    parent, left, _ = ctx_nodes()
    ctx = PathContext(1, [2.0])
    d_old, d_new = ctx.descend(parent, left, go_left=True)
    assert d_old is None
    assert d_new == pytest.approx(4.0 / 3.0)


def test_descend_first_occurrence_outside():
    parent, left, _ = ctx_nodes()
    ctx = PathContext(1, [7.0])
    d_old, d_new = ctx.descend(parent, left, go_left=True)
    assert d_old is None
    assert d_new == 0.0


def test_descend_nested_same_feature_reports_parent_delta():
    # ancestor split already set cov product 1/2 with x inside; the second
    # descend on the same feature must report delta_old = 2 before mutating
    root = TreeNode(coverage=8.0, feature=0, threshold=5.0, left=1, right=2)
    mid = TreeNode(coverage=4.0, feature=0, threshold=3.0, left=3, right=4)
    deeper = TreeNode(coverage=1.0, value=0.0)
    ctx = PathContext(1, [2.0])
    ctx.descend(root, mid, go_left=True)
    d_old, d_new = ctx.descend(mid, deeper, go_left=True)
    assert d_old == pytest.approx(2.0)
    assert d_new == pytest.approx(8.0)


def snapshot(ctx):
    return (list(ctx.lo), list(ctx.hi), list(ctx.cov), list(ctx.count),
            list(ctx.order))


def test_descend_ascend_restores_bit_exactly():
    rng = random.Random(0)
    ctx = PathContext(3, [1.5, -2.0, 0.25])
    stack = []
    for _ in range(40):
        if ctx.path_depth and rng.random() < 0.4:
            ctx.ascend()
            assert snapshot(ctx) == stack.pop()
        else:
            stack.append(snapshot(ctx))
            f = rng.randrange(3)
            cov = float(rng.randint(2, 9))
            parent = TreeNode(coverage=cov + 1.0, feature=f,
                              threshold=rng.uniform(-3, 3), left=1, right=2)
            child = TreeNode(coverage=cov, value=0.0)
            ctx.descend(parent, child, go_left=rng.random() < 0.5)
    while stack:
        ctx.ascend()
        assert snapshot(ctx) == stack.pop()
    assert ctx.path_depth == 0


def test_nested_descends_restore():
    parent, left, right = ctx_nodes()
    ctx = PathContext(1, [4.0])
    initial = snapshot(ctx)
    for _ in range(5):
        ctx.descend(parent, left, go_left=True)
    for _ in range(5):
        ctx.ascend()
    assert snapshot(ctx) == initial


def test_ascend_on_fresh_context_raises():
    ctx = PathContext(2, [0.0, 0.0])
    with pytest.raises(RuntimeError):
        ctx.ascend()


def test_delta_range_property():
    # delta is 0 (outside interval) or >= 1 (1 over a product of ratios <= 1)
    rng = random.Random(1)
    for _ in range(200):
        ctx = PathContext(2, [rng.uniform(-5, 5), rng.uniform(-5, 5)])
        for _ in range(rng.randint(1, 8)):
            f = rng.randrange(2)
            cov_child = float(rng.randint(1, 9))
            cov_parent = cov_child + float(rng.randint(1, 9))
            parent = TreeNode(coverage=cov_parent, feature=f,
                              threshold=float(rng.randint(-4, 4)), left=1, right=2)
            child = TreeNode(coverage=cov_child, value=0.0)
            ctx.descend(parent, child, go_left=rng.random() < 0.5)
            for g in range(2):
                d = ctx.delta(g)
                assert d == 0.0 or d >= 1.0


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def test_dataset_round_trip(tmp_path):
    rows = [[1.5, -2.25], [0.1, math.pi]]
    p = tmp_path / "d.csv"
    p.write_text(dump_dataset(rows, 2))
    assert load_dataset(p) == rows


def test_dataset_bad_header(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ModelFormatError, match="header"):
        load_dataset(p)


def test_dataset_ragged_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("f0,f1\n1,2\n3\n")
    with pytest.raises(ModelFormatError, match="line 3"):
        load_dataset(p)
