"""Binary decision-tree ensembles: loading, validation, prediction, path context.

A model is a list of trees, each stored as a flat node array with the root at
index 0.  Split nodes route a point left iff ``x[feature] < threshold``; the
boundary value goes right.  Every node carries a coverage (the number, or
weight, of training points that reached it), and a split's coverage must equal
the sum of its children's.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

FORMAT_VERSION = 1
AGGREGATIONS = ("average", "sum")

#: Recognized labels for Attribution.method.
METHODS = (
    "shapley_basic",
    "shapley_fast",
    "banzhaf_basic",
    "banzhaf_fast",
    "oracle_shapley",
    "oracle_banzhaf",
    "oracle_custom",
    "exact",
)

# Relative tolerance for the split-coverage consistency check.  Integer-valued
# coverages are checked exactly; real-valued covers from boosting dumps may
# carry rounding in their last digits.
_COVERAGE_RTOL = 1e-9


class ModelFormatError(ValueError):
    """Raised when a model document is malformed or violates an invariant."""


class DimensionMismatchError(ValueError):
    """Raised when a feature vector or dataset does not match num_features."""


@dataclass(frozen=True)
class TreeNode:
    """One node of a tree: a split (feature/threshold/children) or a leaf (value)."""

    coverage: float
    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class Tree:
    """A validated tree: flat node array, root at index 0."""

    nodes: tuple[TreeNode, ...]
    depth: int
    num_leaves: int


@dataclass(frozen=True)
class TreeEnsemble:
    """An immutable ensemble of trees plus aggregation rule."""

    trees: tuple[Tree, ...]
    num_features: int
    aggregation: str = "average"

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    @property
    def max_depth(self) -> int:
        return max(t.depth for t in self.trees)

    @property
    def max_leaves(self) -> int:
        return max(t.num_leaves for t in self.trees)

    def split_features(self) -> frozenset[int]:
        """Features that appear in at least one split node."""
        return frozenset(
            n.feature for t in self.trees for n in t.nodes if not n.is_leaf
        )

    def has_integer_coverages(self) -> bool:
        return all(
            float(n.coverage).is_integer() for t in self.trees for n in t.nodes
        )


@dataclass
class Attribution:
    """Per-feature attribution values plus the model's expected value."""

    values: list
    expected_value: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def total(self):
        return sum(self.values)


# ---------------------------------------------------------------------------
# loading / validation
# ---------------------------------------------------------------------------

def _require(cond: bool, where: str, msg: str):
    if not cond:
        raise ModelFormatError(f"{where}: {msg}")


def _parse_node(obj, where: str) -> TreeNode:
    _require(isinstance(obj, dict), where, "node must be an object")
    kind = obj.get("kind")
    _require(kind in ("split", "leaf"), where, f"bad node kind {kind!r}")
    cov = obj.get("coverage")
    _require(isinstance(cov, (int, float)) and not isinstance(cov, bool),
             where, "coverage must be a number")
    cov = float(cov)
    _require(math.isfinite(cov) and cov > 0, where, "coverage must be finite and > 0")
    if kind == "leaf":
        val = obj.get("value")
        _require(isinstance(val, (int, float)) and not isinstance(val, bool),
                 where, "leaf value must be a number")
        _require(math.isfinite(float(val)), where, "leaf value must be finite")
        return TreeNode(coverage=cov, value=float(val))
    feat = obj.get("feature")
    _require(isinstance(feat, int) and not isinstance(feat, bool),
             where, "split feature must be an integer")
    thr = obj.get("threshold")
    _require(isinstance(thr, (int, float)) and not isinstance(thr, bool),
             where, "split threshold must be a number")
    _require(math.isfinite(float(thr)), where, "split threshold must be finite")
    left, right = obj.get("left"), obj.get("right")
    for name, idx in (("left", left), ("right", right)):
        _require(isinstance(idx, int) and not isinstance(idx, bool),
                 where, f"{name} child must be an integer index")
    return TreeNode(coverage=cov, feature=feat, threshold=float(thr),
                    left=left, right=right)


def _validate_tree(nodes: list[TreeNode], num_features: int, ti: int) -> Tree:
    where = f"tree {ti}"
    _require(len(nodes) > 0, where, "tree has no nodes")
    n = len(nodes)
    for i, nd in enumerate(nodes):
        if nd.is_leaf:
            continue
        _require(0 <= nd.feature < num_features, f"{where}, node {i}",
                 f"feature index {nd.feature} out of range [0, {num_features})")
        for ci in (nd.left, nd.right):
            _require(0 <= ci < n, f"{where}, node {i}",
                     f"child index {ci} out of range")
            _require(ci != 0, f"{where}, node {i}",
                     "root referenced as a child (cycle)")
        delta = abs(nd.coverage - (nodes[nd.left].coverage + nodes[nd.right].coverage))
        _require(delta <= _COVERAGE_RTOL * max(nd.coverage, 1.0),
                 f"{where}, node {i}",
                 f"coverage {nd.coverage} != left {nodes[nd.left].coverage} "
                 f"+ right {nodes[nd.right].coverage}")

    # every non-root node has exactly one parent; all nodes reachable from 0
    seen = [False] * n
    seen[0] = True
    depth = [0] * n
    num_leaves = 0
    max_depth = 0
    stack = [0]
    while stack:
        i = stack.pop()
        nd = nodes[i]
        if nd.is_leaf:
            num_leaves += 1
            max_depth = max(max_depth, depth[i])
            continue
        for ci in (nd.left, nd.right):
            _require(not seen[ci], f"{where}, node {ci}",
                     "node has multiple parents (cycle)")
            seen[ci] = True
            depth[ci] = depth[i] + 1
            stack.append(ci)
    orphans = [i for i, s in enumerate(seen) if not s]
    _require(not orphans, where, f"orphan node(s) {orphans} not reachable from root")
    return Tree(nodes=tuple(nodes), depth=max_depth, num_leaves=num_leaves)


def build_tree(nodes: Sequence[TreeNode], num_features: int) -> Tree:
    """Validate a node list (root at index 0) and derive depth/leaf counts."""
    return _validate_tree(list(nodes), num_features, 0)


def load_model(data: bytes | str) -> TreeEnsemble:
    """Parse and validate a model JSON document."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"invalid JSON: {e}") from None
    _require(isinstance(doc, dict), "document", "top level must be an object")
    _require(doc.get("format_version") == FORMAT_VERSION, "document",
             f"format_version must be {FORMAT_VERSION}")
    nf = doc.get("num_features")
    _require(isinstance(nf, int) and not isinstance(nf, bool) and nf >= 0,
             "document", "num_features must be a nonnegative integer")
    agg = doc.get("aggregation", "average")
    _require(agg in AGGREGATIONS, "document",
             f"aggregation must be one of {AGGREGATIONS}")
    raw_trees = doc.get("trees")
    _require(isinstance(raw_trees, list) and len(raw_trees) >= 1, "document",
             "trees must be a nonempty list")
    trees = []
    for ti, rt in enumerate(raw_trees):
        _require(isinstance(rt, dict) and isinstance(rt.get("nodes"), list),
                 f"tree {ti}", "tree must be an object with a nodes list")
        nodes = [_parse_node(nd, f"tree {ti}, node {i}")
                 for i, nd in enumerate(rt["nodes"])]
        trees.append(_validate_tree(nodes, nf, ti))
    return TreeEnsemble(trees=tuple(trees), num_features=nf, aggregation=agg)


def load_model_file(path) -> TreeEnsemble:
    with open(path, "rb") as fh:
        return load_model(fh.read())


def dump_model(m: TreeEnsemble) -> str:
    """Serialize an ensemble to its JSON document form (round-trip floats)."""
    def node_obj(nd: TreeNode):
        if nd.is_leaf:
            return {"kind": "leaf", "value": nd.value, "coverage": nd.coverage}
        return {"kind": "split", "feature": nd.feature, "threshold": nd.threshold,
                "left": nd.left, "right": nd.right, "coverage": nd.coverage}

    doc = {
        "format_version": FORMAT_VERSION,
        "num_features": m.num_features,
        "aggregation": m.aggregation,
        "trees": [{"nodes": [node_obj(nd) for nd in t.nodes]} for t in m.trees],
    }
    return json.dumps(doc)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def dataset_header(n: int) -> str:
    return ",".join(f"f{i}" for i in range(n))


def load_dataset(path) -> list[list[float]]:
    """Read a dataset CSV (header f0,...,f{n-1}; one point per row)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n\r") for ln in fh if ln.strip()]
    if not lines:
        raise ModelFormatError(f"{path}: empty dataset")
    header = lines[0].split(",")
    n = len(header)
    if header != [f"f{i}" for i in range(n)]:
        raise ModelFormatError(f"{path}: bad header {lines[0]!r}")
    rows = []
    for li, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != n:
            raise ModelFormatError(f"{path}, line {li}: expected {n} columns")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ModelFormatError(f"{path}, line {li}: non-numeric value") from None
    return rows


def dump_dataset(rows: Sequence[Sequence[float]], n: int) -> str:
    out = [dataset_header(n)]
    for row in rows:
        out.append(",".join("%.17g" % v for v in row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

def check_point(m: TreeEnsemble, x: Sequence[float]):
    if len(x) != m.num_features:
        raise DimensionMismatchError(
            f"point has {len(x)} values, model expects {m.num_features}")


def predict_tree(tree: Tree, x: Sequence[float]) -> float:
    i = 0
    nodes = tree.nodes
    while not nodes[i].is_leaf:
        nd = nodes[i]
        i = nd.left if x[nd.feature] < nd.threshold else nd.right
    return nodes[i].value


def predict(m: TreeEnsemble, x: Sequence[float]) -> float:
    """Model output at x: per-tree root-leaf descent, aggregated."""
    check_point(m, x)
    total = sum(predict_tree(t, x) for t in m.trees)
    return total / m.num_trees if m.aggregation == "average" else total


# ---------------------------------------------------------------------------
# path context
# ---------------------------------------------------------------------------

class PathContext:
    """Live per-feature state along one root-leaf traversal.

    For each feature y the context tracks the interval x_y must lie in for the
    evaluation to reach the current node (always of the half-open form
    [lo, hi) here, because a left branch intersects with (-inf, t) and a right
    branch with [t, inf)), and the product of child/parent coverage ratios
    over ancestors that split on y.  ``descend`` mutates exactly one feature's
    entry and ``ascend`` restores it bit-exactly.

    delta(y) = [x_y in interval] / coverage_product(y) is the multiplicative
    weight change from fixing feature y at the current node; it is 0 or >= 1.
    """

    __slots__ = ("x", "exact", "one", "lo", "hi", "cov", "count", "order", "_saved")

    def __init__(self, num_features: int, x: Sequence[float], exact: bool = False):
        self.x = x
        self.exact = exact
        self.one = mpq(1) if exact else 1.0
        self.lo = [float("-inf")] * num_features
        self.hi = [float("inf")] * num_features
        self.cov = [self.one] * num_features
        self.count = [0] * num_features
        self.order: list[int] = []      # path features, first-occurrence order
        self._saved: list[tuple] = []

    def delta(self, feature: int):
        inside = self.lo[feature] <= self.x[feature] < self.hi[feature]
        return (1 if inside else 0) / self.cov[feature]

    def descend(self, parent: TreeNode, child: TreeNode, go_left: bool):
        """Enter a child of ``parent``; returns (delta_old, delta_new).

        delta_old is the parent-context delta for the split feature, or None
        on its first occurrence along the path; delta_new is the child-context
        delta after the interval and coverage-product updates.
        """
        f = parent.feature
        d_old = self.delta(f) if self.count[f] > 0 else None
        self._saved.append((f, self.lo[f], self.hi[f], self.cov[f]))
        if self.count[f] == 0:
            self.order.append(f)
        if go_left:
            self.hi[f] = min(self.hi[f], parent.threshold)
        else:
            self.lo[f] = max(self.lo[f], parent.threshold)
        if self.exact:
            self.cov[f] *= mpq(int(child.coverage), int(parent.coverage))
        else:
            self.cov[f] *= child.coverage / parent.coverage
        self.count[f] += 1
        return d_old, self.delta(f)

    def ascend(self):
        """Undo the matching descend, restoring the context bit-exactly."""
        if not self._saved:
            raise RuntimeError("ascend without matching descend")
        f, lo, hi, cov = self._saved.pop()
        self.lo[f], self.hi[f], self.cov[f] = lo, hi, cov
        self.count[f] -= 1
        if self.count[f] == 0:
            self.order.pop()

    @property
    def path_depth(self) -> int:
        return len(self._saved)
