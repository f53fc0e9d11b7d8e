"""Shapley attributions for tree ensembles by dynamic programming over paths.

The state carried along a root-leaf traversal is a vector psi of length
|G| + 1 for the current set G of path features: psi[k] aggregates, over the
size-k subsets S of G, the weight the set function's recursion assigns to the
current subtree, normalized so that the Shapley weights appear when the
vector is summed.  Two local moves update it:

* ``add_feature(psi, delta)`` extends G by a feature whose multiplicative
  weight effect at this node is ``delta`` (0 if x falls outside the feature's
  current interval, else 1 over its coverage product).
* ``del_feature(psi, delta)`` is the exact inverse, solved by a forward
  recurrence.

A leaf's contribution to feature i is ``f(leaf) * (delta_i - 1)`` times the
summed state with i removed.  The basic traversal recomputes that removal per
(leaf, feature) pair, costing O(L D^2) per tree.  The faster traversal pads
every path feature set to the tree depth with dummy features (delta exactly
1, which never changes the summed state), sums leaf states bottom-up, and
removes each feature once per node of its nearest-split region, for O(L D).

Both run in float64 or, for verification, exact rational arithmetic.  The
engines here are generic in the state algebra; the Banzhaf module reuses them
with a scalar state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from . import pathdep
from .model import Attribution, PathContext, Tree, TreeEnsemble, check_point


@dataclass
class OpCounter:
    """Tally of state work: one unit per state entry written by an operation."""

    add_count: int = 0
    del_count: int = 0
    scale_count: int = 0

    @property
    def total(self) -> int:
        return self.add_count + self.del_count + self.scale_count


def add_feature(psi: list, delta, counter: OpCounter | None = None) -> list:
    """Extend the state by one feature with weight effect ``delta``."""
    m = len(psi) - 1
    d = m + 2
    out = [(m + 1) * psi[0] / d]
    for k in range(1, m + 1):
        out.append(((m + 1 - k) * psi[k] + k * delta * psi[k - 1]) / d)
    out.append((m + 1) * delta * psi[m] / d)
    if counter is not None:
        counter.add_count += m + 2
    return out


def del_feature(psi: list, delta, counter: OpCounter | None = None) -> list:
    """Remove one feature with weight effect ``delta``; inverse of add_feature."""
    m = len(psi) - 1
    if m < 1:
        raise ValueError("cannot remove a feature from the empty state")
    out = []
    prev = psi[0] * 0
    for k in range(m):
        prev = ((m + 1) * psi[k] - k * delta * prev) / (m - k)
        out.append(prev)
    if counter is not None:
        counter.del_count += m
    return out


class FeatureStack:
    """Per-feature stacks of (node, subtree sum) used by the fast traversal.

    While a node v whose parent splits on feature j is being processed, every
    already-finished descendant whose nearest same-feature ancestor is still
    open sits on stack j.  Recording the height at entry and popping back down
    to it on exit yields exactly the descendants v must subtract to restrict
    its subtree sum to the leaves it owns for feature j.
    """

    def __init__(self):
        self._stacks: dict[int, list] = {}

    def height(self, feature: int) -> int:
        return len(self._stacks.get(feature, ()))

    def push(self, feature: int, node: int):
        self._stacks.setdefault(feature, []).append([node, None])

    def set_payload(self, feature: int, node: int, payload):
        top = self._stacks[feature][-1]
        if top[0] != node:
            raise AssertionError("stack top does not match the finishing node")
        top[1] = payload

    def pop_above(self, feature: int, height: int) -> list:
        st = self._stacks.get(feature)
        out = []
        while st and len(st) > height:
            out.append(st.pop())
        return out

    @property
    def empty(self) -> bool:
        return all(not s for s in self._stacks.values())


def _ratio(a: float, b: float, exact: bool):
    return mpq(int(a), int(b)) if exact else a / b


class _ShapleyOps:
    """Vector-state algebra plus op counting for the traversal engines."""

    vector = True

    def __init__(self, counter: OpCounter, exact: bool):
        self.counter = counter
        self.exact = exact
        self.one = mpq(1) if exact else 1.0

    def initial(self):
        return [self.one]

    def of_value(self, v: float):
        return mpq(v) if self.exact else v

    def add(self, psi, delta):
        return add_feature(psi, delta, self.counter)

    def delete(self, psi, delta):
        return del_feature(psi, delta, self.counter)

    def scale(self, psi, q):
        self.counter.scale_count += len(psi)
        return [v * q for v in psi]

    def total(self, psi):
        return sum(psi)

    def weight(self, psi, v):
        return [v * u for u in psi]

    def combine(self, a, b):
        return [u + w for u, w in zip(a, b)]

    def subtract(self, a, b):
        return [u - w for u, w in zip(a, b)]


# ---------------------------------------------------------------------------
# traversal engines (generic in the state algebra)
# ---------------------------------------------------------------------------

def _traverse_basic(tree: Tree, x, num_features: int, ops, values: list):
    """Accumulate one tree's contributions, removing features leaf by leaf."""
    nodes = tree.nodes
    root = nodes[0]
    if root.is_leaf:
        return
    ctx = PathContext(num_features, x, ops.exact)
    state = ops.initial()

    def visit(ci: int, pi: int):
        nonlocal state
        parent, node = nodes[pi], nodes[ci]
        d_old, d_new = ctx.descend(parent, node, ci == parent.left)
        if d_old is not None:
            state = ops.delete(state, d_old)
        state = ops.scale(state, _ratio(node.coverage, parent.coverage, ops.exact))
        state = ops.add(state, d_new)
        if node.is_leaf:
            fv = ops.of_value(node.value)
            for f in ctx.order:
                d = ctx.delta(f)
                reduced = ops.delete(state, d)
                values[f] += ops.total(reduced) * fv * (d - 1)
                state = ops.add(reduced, d)
        else:
            visit(node.left, ci)
            visit(node.right, ci)
        state = ops.delete(state, d_new)
        state = ops.scale(state, _ratio(parent.coverage, node.coverage, ops.exact))
        ctx.ascend()
        if d_old is not None:
            state = ops.add(state, d_old)

    visit(root.left, 0)
    visit(root.right, 0)


def _traverse_fast(tree: Tree, x, num_features: int, ops, values: list):
    """Accumulate one tree's contributions via bottom-up subtree sums.

    Vector states are padded to the tree depth with dummy features so every
    leaf state has uniform length; a dummy is retired whenever a genuinely new
    feature enters the path.  Scalar states need no padding (a dummy would
    multiply by exactly 1).
    """
    nodes = tree.nodes
    root = nodes[0]
    if root.is_leaf:
        return
    ctx = PathContext(num_features, x, ops.exact)
    state = ops.initial()
    if ops.vector:
        for _ in range(tree.depth):
            state = ops.add(state, ops.one)
    stack = FeatureStack()

    def visit(ci: int, pi: int):
        nonlocal state
        parent, node = nodes[pi], nodes[ci]
        z = parent.feature
        d_old, d_new = ctx.descend(parent, node, ci == parent.left)
        pushed = d_old is not None
        if pushed:
            state = ops.delete(state, d_old)
            stack.push(z, ci)
        elif ops.vector:
            state = ops.delete(state, ops.one)
        state = ops.scale(state, _ratio(node.coverage, parent.coverage, ops.exact))
        state = ops.add(state, d_new)
        mark = stack.height(z)
        if node.is_leaf:
            subtree_sum = ops.weight(state, ops.of_value(node.value))
        else:
            subtree_sum = ops.combine(visit(node.left, ci), visit(node.right, ci))
        owned = subtree_sum
        for _, payload in stack.pop_above(z, mark):
            owned = ops.subtract(owned, payload)
        values[z] += ops.total(ops.delete(owned, d_new)) * (d_new - 1)
        if pushed:
            stack.set_payload(z, ci, subtree_sum)
        state = ops.delete(state, d_new)
        state = ops.scale(state, _ratio(parent.coverage, node.coverage, ops.exact))
        ctx.ascend()
        if pushed:
            state = ops.add(state, d_old)
        elif ops.vector:
            state = ops.add(state, ops.one)
        return subtree_sum

    visit(root.left, 0)
    visit(root.right, 0)
    if not stack.empty:
        raise AssertionError("feature stack not drained after traversal")


def _run(m: TreeEnsemble, x, ops, engine, method: str):
    check_point(m, x)
    if ops.exact and not m.has_integer_coverages():
        raise ValueError("rational mode requires integer-valued coverages")
    zero = mpq(0) if ops.exact else 0.0
    values = [zero] * m.num_features
    for tree in m.trees:
        engine(tree, x, m.num_features, ops, values)
    if m.aggregation == "average":
        values = [v / m.num_trees for v in values]
    ev = pathdep.expected_value(m, exact=ops.exact)
    return Attribution(values=values, expected_value=ev, method=method)


def explain_basic(m: TreeEnsemble, x: Sequence[float],
                  exact: bool = False) -> tuple[Attribution, OpCounter]:
    """Shapley values by the per-leaf removal traversal (O(T L D^2 + n))."""
    counter = OpCounter()
    ops = _ShapleyOps(counter, exact)
    return _run(m, x, ops, _traverse_basic, "shapley_basic"), counter


def explain_fast(m: TreeEnsemble, x: Sequence[float],
                 exact: bool = False) -> tuple[Attribution, OpCounter]:
    """Shapley values by the padded bottom-up traversal (O(T L D + n))."""
    counter = OpCounter()
    ops = _ShapleyOps(counter, exact)
    return _run(m, x, ops, _traverse_fast, "shapley_fast"), counter
