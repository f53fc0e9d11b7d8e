"""Ground-truth evaluation: the coverage-weighted set function and brute-force values.

g(S) is the model output when the features in S are fixed to x and every other
split is replaced by the coverage-weighted average of its branches.  Shapley
and Banzhaf values are then direct weighted sums of marginals g(S + i) - g(S)
over all subsets, evaluated in float64 or exactly in rational arithmetic.
The rational results are the reference every dynamic-programming algorithm in
this package is tested against.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from gmpy2 import mpq

from .model import (
    Attribution,
    Tree,
    TreeEnsemble,
    check_point,
)

#: Brute force enumerates 2^|R| subsets; refuse beyond this many relevant features.
ORACLE_FEATURE_CAP = 25


class OracleCapError(ValueError):
    """Raised when brute-force enumeration would be too large."""


def to_rational(v) -> mpq:
    """Exact rational from an int or float (binary floats convert exactly)."""
    return mpq(v)


def _check_rational_ok(m: TreeEnsemble):
    if not m.has_integer_coverages():
        raise ValueError("rational mode requires integer-valued coverages")


def relevant_features(m: TreeEnsemble) -> list[int]:
    """Sorted features that occur in at least one split node."""
    return sorted(m.split_features())


# ---------------------------------------------------------------------------
# set function
# ---------------------------------------------------------------------------

def _eval_g_tree(tree: Tree, x, subset: frozenset, exact: bool):
    nodes = tree.nodes

    def desc(i):
        nd = nodes[i]
        if nd.is_leaf:
            return mpq(nd.value) if exact else nd.value
        if nd.feature in subset:
            return desc(nd.left if x[nd.feature] < nd.threshold else nd.right)
        ra = nodes[nd.left].coverage
        rb = nodes[nd.right].coverage
        if exact:
            return (mpq(int(ra)) * desc(nd.left)
                    + mpq(int(rb)) * desc(nd.right)) / mpq(int(nd.coverage))
        return (ra * desc(nd.left) + rb * desc(nd.right)) / nd.coverage

    return desc(0)


def _aggregate(m: TreeEnsemble, total, exact: bool):
    if m.aggregation != "average":
        return total
    return total / (mpq(m.num_trees) if exact else m.num_trees)


def eval_g(m: TreeEnsemble, x: Sequence[float], subset: Iterable[int],
           exact: bool = False):
    """Evaluate g(S): fix features in ``subset`` to x, average out the rest."""
    check_point(m, x)
    if exact:
        _check_rational_ok(m)
    sub = frozenset(subset)
    total = mpq(0) if exact else 0.0
    for t in m.trees:
        total += _eval_g_tree(t, x, sub, exact)
    return _aggregate(m, total, exact)


def expected_value(m: TreeEnsemble, exact: bool = False):
    """g(empty set): the coverage-weighted mean of leaf values, aggregated."""
    x = [0.0] * m.num_features   # never read when no feature is fixed
    return eval_g(m, x, (), exact=exact)


def _g_subset_table_tree(tree: Tree, x, pos: dict, exact: bool):
    """All g values of one tree at once, keyed by subset bitmask.

    Returns (mask, table) where mask marks the features occurring in the tree
    and table[s] is the tree's g value for any subset whose restriction to the
    tree's features is s.  Each node only enumerates subsets of the features
    in its own subtree, which keeps the table quadratic-free in practice.
    """
    nodes = tree.nodes

    def go(i):
        nd = nodes[i]
        if nd.is_leaf:
            return 0, {0: mpq(nd.value) if exact else nd.value}
        bit = 1 << pos[nd.feature]
        mask_a, tab_a = go(nd.left)
        mask_b, tab_b = go(nd.right)
        mask = mask_a | mask_b | bit
        if exact:
            ra = mpq(int(nodes[nd.left].coverage))
            rb = mpq(int(nodes[nd.right].coverage))
            rv = mpq(int(nd.coverage))
        else:
            ra = nodes[nd.left].coverage
            rb = nodes[nd.right].coverage
            rv = nd.coverage
        go_left = x[nd.feature] < nd.threshold
        tab = {}
        s = mask
        while True:
            if s & bit:
                tab[s] = tab_a[s & mask_a] if go_left else tab_b[s & mask_b]
            else:
                tab[s] = (ra * tab_a[s & mask_a] + rb * tab_b[s & mask_b]) / rv
            if s == 0:
                break
            s = (s - 1) & mask
        return mask, tab

    return go(0)


def eval_g_all(m: TreeEnsemble, x: Sequence[float], exact: bool = False):
    """g(S) for every subset S of the relevant features.

    Returns (features, g) where g[mask] is the value for the subset encoded by
    ``mask`` over ``features`` (bit i set means features[i] is fixed).  Equals
    2^|R| independent eval_g calls; shared subtree tables just make it fast.
    """
    check_point(m, x)
    if exact:
        _check_rational_ok(m)
    feats = relevant_features(m)
    pos = {f: i for i, f in enumerate(feats)}
    size = 1 << len(feats)
    zero = mpq(0) if exact else 0.0
    g = [zero] * size
    for t in m.trees:
        mask, tab = _g_subset_table_tree(t, x, pos, exact)
        for s in range(size):
            g[s] += tab[s & mask]
    return feats, [_aggregate(m, v, exact) for v in g]


# ---------------------------------------------------------------------------
# subset weights and brute-force values
# ---------------------------------------------------------------------------

def subset_weights(scheme, n: int, exact: bool = False) -> list:
    """Per-size weights w_k for subsets S of the n-1 other features, k = |S|.

    "shapley" gives (1/n) / C(n-1, k); "banzhaf" gives the flat 1 / 2^(n-1).
    A sequence of n nonnegative custom weights is accepted if the weighted
    subset counts sum to 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if scheme == "shapley":
        if exact:
            return [mpq(1, n) / math.comb(n - 1, k) for k in range(n)]
        return [1.0 / (n * math.comb(n - 1, k)) for k in range(n)]
    if scheme == "banzhaf":
        w = mpq(1, 2 ** (n - 1)) if exact else 0.5 ** (n - 1)
        return [w] * n
    weights = list(scheme)
    if len(weights) != n:
        raise ValueError(f"custom scheme must have {n} per-size weights")
    if any(w < 0 for w in weights):
        raise ValueError("custom weights must be nonnegative")
    total = sum(math.comb(n - 1, k) * w for k, w in enumerate(weights))
    if exact:
        if total != 1:
            raise ValueError("custom weights must sum to 1 over all subsets")
        return [mpq(w) for w in weights]
    if abs(total - 1.0) > 1e-9:
        raise ValueError("custom weights must sum to 1 over all subsets")
    return [float(w) for w in weights]


def oracle_values(m: TreeEnsemble, x: Sequence[float], scheme="shapley",
                  exact: bool = True, cap: int = ORACLE_FEATURE_CAP) -> Attribution:
    """Attribution by direct summation over all subsets of relevant features.

    Features never used in a split cannot change g, so the sums over the full
    feature set collapse to sums over the relevant set R, with |R| playing the
    role of n in the weights.  Subsets are enumerated in increasing bitmask
    order so float-mode results are reproducible.
    """
    r = len(relevant_features(m))
    if r > cap:
        raise OracleCapError(
            f"{r} relevant features exceeds the brute-force cap of {cap}")
    feats, g = eval_g_all(m, x, exact=exact)
    zero = mpq(0) if exact else 0.0
    values = [zero] * m.num_features
    if r > 0:
        weights = subset_weights(scheme, r, exact=exact)
        for i, f in enumerate(feats):
            bit = 1 << i
            acc = zero
            for s in range(1 << r):
                if s & bit:
                    continue
                acc += weights[s.bit_count()] * (g[s | bit] - g[s])
            values[f] = acc
    if scheme == "shapley":
        method = "oracle_shapley"
    elif scheme == "banzhaf":
        method = "oracle_banzhaf"
    else:
        method = "oracle_custom"
    return Attribution(values=values, expected_value=g[0], method=method)
