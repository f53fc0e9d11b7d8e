"""Synthetic instances with known exact attributions, and error/scale sweeps.

Both families use one tree, one all-ones data point, unit thresholds and leaf
coverage 33.  The root splits the tree into a constant-0 left half and a
constant-777 right half of equal total coverage, so the root's split feature
(the last feature index) carries exactly 777/2 and every other feature
exactly 0, for any subset weighting.  "dense" uses two full binary subtrees;
"sparse" uses two one-sided chains, which drive the depth up at linear size
and expose the float64 fragility of the Shapley recurrences.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from . import banzhaf, shapley
from .model import Attribution, Tree, TreeEnsemble, TreeNode, build_tree

LEAF_COVERAGE = 33.0
RIGHT_VALUE = 777.0
MAX_DENSE_DEPTH = 24
MAX_SPARSE_DEPTH = 200

EXPLAINERS = {
    "shapley_basic": shapley.explain_basic,
    "shapley_fast": shapley.explain_fast,
    "banzhaf_basic": banzhaf.explain_banzhaf_basic,
    "banzhaf_fast": banzhaf.explain_banzhaf_fast,
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Family ("dense" or "sparse") and depth parameter d (= feature count)."""

    kind: str
    depth: int

    def validate(self):
        if self.kind not in ("dense", "sparse"):
            raise ValueError(f"unknown synthetic kind {self.kind!r}")
        limit = MAX_DENSE_DEPTH if self.kind == "dense" else MAX_SPARSE_DEPTH
        if not 1 <= self.depth <= limit:
            raise ValueError(
                f"{self.kind} depth must be in [1, {limit}], got {self.depth}")


@dataclass(frozen=True)
class ErrorCurvePoint:
    depth: int
    method: str
    max_abs_error: float


def gen_synthetic(spec: SyntheticSpec) -> tuple[TreeEnsemble, list[float], Attribution]:
    """Build (ensemble, data point, exact attribution) for a synthetic spec.

    Depth-i internal nodes split on feature d-1-i at threshold 1; the point is
    all ones, which goes right everywhere (the split rule is strict <).
    """
    spec.validate()
    d = spec.depth
    nodes: list[TreeNode] = []

    def add(**kw) -> int:
        nodes.append(TreeNode(**kw))
        return len(nodes) - 1

    def leaf(value: float) -> int:
        return add(coverage=LEAF_COVERAGE, value=value)

    def dense_subtree(value: float, levels: int, global_depth: int) -> int:
        if levels == 0:
            return leaf(value)
        left = dense_subtree(value, levels - 1, global_depth + 1)
        right = dense_subtree(value, levels - 1, global_depth + 1)
        return add(coverage=LEAF_COVERAGE * 2 ** levels,
                   feature=d - 1 - global_depth, threshold=1.0,
                   left=left, right=right)

    def sparse_subtree(value: float, levels: int, global_depth: int) -> int:
        # one-sided chain: the left child of every inner node is a leaf
        if levels == 0:
            return leaf(value)
        left = leaf(value)
        right = (leaf(value) if levels == 1
                 else sparse_subtree(value, levels - 1, global_depth + 1))
        return add(coverage=LEAF_COVERAGE * (levels + 1),
                   feature=d - 1 - global_depth, threshold=1.0,
                   left=left, right=right)

    subtree = dense_subtree if spec.kind == "dense" else sparse_subtree
    total = LEAF_COVERAGE * (2 ** d if spec.kind == "dense" else max(2 * d, 2))
    nodes.append(TreeNode(coverage=total, feature=d - 1, threshold=1.0,
                          left=-1, right=-1))
    left = subtree(0.0, d - 1, 1)
    right = subtree(RIGHT_VALUE, d - 1, 1)
    nodes[0] = TreeNode(coverage=total, feature=d - 1, threshold=1.0,
                        left=left, right=right)

    tree = build_tree(nodes, d)
    ensemble = TreeEnsemble(trees=(tree,), num_features=d, aggregation="average")
    x = [1.0] * d
    exact = Attribution(values=[mpq(0)] * (d - 1) + [mpq(777, 2)],
                        expected_value=mpq(777, 2), method="exact")
    return ensemble, x, exact


def error_curve(kind: str, depths: Sequence[int], methods: Sequence[str],
                output=None) -> list[ErrorCurvePoint]:
    """Float64 max-abs attribution error versus the exact answer, per depth.

    Writes "depth,method,max_abs_error" CSV to ``output`` when given.
    """
    for m in methods:
        if m not in EXPLAINERS:
            raise ValueError(f"unknown method {m!r}")
    points = []
    for depth in depths:
        ensemble, x, exact = gen_synthetic(SyntheticSpec(kind, depth))
        ref = [float(v) for v in exact.values]
        for method in methods:
            att, _ = EXPLAINERS[method](ensemble, x)
            err = max(abs(a - b) for a, b in zip(att.values, ref))
            points.append(ErrorCurvePoint(depth=depth, method=method,
                                          max_abs_error=err))
    if output is not None:
        lines = ["depth,method,max_abs_error"]
        lines += [f"{p.depth},{p.method},{'%.17g' % p.max_abs_error}"
                  for p in points]
        with open(output, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return points


# ---------------------------------------------------------------------------
# random well-conditioned test ensembles
# ---------------------------------------------------------------------------

def random_tree(rng: random.Random, split_features: Sequence[int],
                max_leaves: int = 16) -> Tree:
    """Grow a random tree by splitting leaves, kept numerically tame.

    Feature repetition along a path is capped (twice on small trees, once on
    larger ones) and growth prefers shallow leaves, so coverage products stay
    far from zero and float64 attributions keep ~1e-11 agreement with the
    exact oracle.  Leaf coverages are integers for rational-mode runs.
    """
    pool = list(split_features)
    target = rng.randint(2, max_leaves)
    max_repeat = 2 if target <= 16 else 1
    if len(pool) * max_repeat < 6:
        target = min(target, 2 ** (len(pool) * max_repeat))

    feats: list[int | None] = [None]
    thrs: list[float] = [0.0]
    kids: list[list[int]] = [[-1, -1]]
    path: list[Counter] = [Counter()]
    depth: list[int] = [0]
    leaves = [0]
    while len(leaves) < target:
        eligible = sorted(
            (depth[i], i) for i in leaves
            if any(path[i][f] < max_repeat for f in pool))
        if not eligible:
            break
        li = eligible[min(len(eligible) - 1,
                          int(rng.random() ** 6 * len(eligible)))][1]
        leaves.remove(li)
        f = rng.choice([f for f in pool if path[li][f] < max_repeat])
        feats[li] = f
        thrs[li] = float(rng.randint(-3, 3))
        for side in (0, 1):
            feats.append(None)
            thrs.append(0.0)
            kids.append([-1, -1])
            path.append(path[li] + Counter([f]))
            depth.append(depth[li] + 1)
            kids[li][side] = len(feats) - 1
            leaves.append(len(feats) - 1)

    values = {li: round(rng.uniform(-10.0, 10.0), 3) for li in leaves}
    coverages = {li: float(rng.randint(10, 20)) for li in leaves}

    def cover(i: int) -> float:
        if feats[i] is None:
            return coverages[i]
        coverages[i] = cover(kids[i][0]) + cover(kids[i][1])
        return coverages[i]

    cover(0)
    nodes = []
    for i in range(len(feats)):
        if feats[i] is None:
            nodes.append(TreeNode(coverage=coverages[i], value=values[i]))
        else:
            nodes.append(TreeNode(coverage=coverages[i], feature=feats[i],
                                  threshold=thrs[i], left=kids[i][0],
                                  right=kids[i][1]))
    num_features = max(pool) + 1
    return build_tree(nodes, num_features)


def random_ensemble(seed, num_trees: int = 3, num_features: int = 8,
                    max_leaves: int = 16,
                    num_split_features: int | None = None) -> TreeEnsemble:
    """Random ensemble for verification runs; extra features stay unused."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    pool = list(range(num_split_features if num_split_features is not None
                      else num_features))
    trees = tuple(random_tree(rng, pool, max_leaves) for _ in range(num_trees))
    return TreeEnsemble(trees=trees, num_features=num_features,
                        aggregation="average")


def random_point(rng: random.Random, num_features: int) -> list[float]:
    """A point on the threshold grid plus jitter, so both branch kinds occur."""
    return [float(rng.randint(-4, 4)) + rng.random() * 0.01
            for _ in range(num_features)]
