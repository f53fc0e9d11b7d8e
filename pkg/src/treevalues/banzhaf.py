"""Banzhaf attributions for tree ensembles.

Banzhaf values weight every subset equally, so the size-stratified state
vector of the Shapley computation collapses to a single number: adding a
feature with weight effect ``delta`` multiplies it by (1 + delta) / 2, and
removing one divides by the same factor.  Dummy features multiply by exactly
1 and can simply be skipped, which is why the bottom-up variant needs no
state padding and runs in O(T L + n).

Both variants reuse the Shapley module's traversal engines with this scalar
algebra, so the two computations share every structural detail (path context,
feature stacks, accumulation order).
"""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from .model import Attribution, TreeEnsemble
from .shapley import OpCounter, _run, _traverse_basic, _traverse_fast


def add_feature_b(beta, delta, counter: OpCounter | None = None):
    """Extend the scalar state by one feature with weight effect ``delta``."""
    if counter is not None:
        counter.add_count += 1
    return (1 + delta) * beta / 2


def del_feature_b(beta, delta, counter: OpCounter | None = None):
    """Remove one feature; exact inverse of add_feature_b (1 + delta > 0)."""
    if counter is not None:
        counter.del_count += 1
    return 2 * beta / (1 + delta)


class _BanzhafOps:
    """Scalar-state algebra with op counting, plugged into the shared engines."""

    vector = False

    def __init__(self, counter: OpCounter, exact: bool):
        self.counter = counter
        self.exact = exact
        self.one = mpq(1) if exact else 1.0

    def initial(self):
        return self.one

    def of_value(self, v: float):
        return mpq(v) if self.exact else v

    def add(self, beta, delta):
        return add_feature_b(beta, delta, self.counter)

    def delete(self, beta, delta):
        return del_feature_b(beta, delta, self.counter)

    def scale(self, beta, q):
        self.counter.scale_count += 1
        return beta * q

    def total(self, beta):
        return beta

    def weight(self, beta, v):
        return v * beta

    def combine(self, a, b):
        return a + b

    def subtract(self, a, b):
        return a - b


def explain_banzhaf_basic(m: TreeEnsemble, x: Sequence[float],
                          exact: bool = False) -> tuple[Attribution, OpCounter]:
    """Banzhaf values by the per-leaf removal traversal (O(T L D + n))."""
    counter = OpCounter()
    ops = _BanzhafOps(counter, exact)
    return _run(m, x, ops, _traverse_basic, "banzhaf_basic"), counter


def explain_banzhaf_fast(m: TreeEnsemble, x: Sequence[float],
                         exact: bool = False) -> tuple[Attribution, OpCounter]:
    """Banzhaf values by the bottom-up traversal (optimal O(T L + n))."""
    counter = OpCounter()
    ops = _BanzhafOps(counter, exact)
    return _run(m, x, ops, _traverse_fast, "banzhaf_fast"), counter
