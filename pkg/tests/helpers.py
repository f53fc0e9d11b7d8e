"""Shared generators for property-style tests."""

import math

from treevalues import HypercubeFunction


def random_monotone_function(rng, k: int) -> HypercubeFunction:
    """Upper closure of a random table, with a random orientation per feature."""
    size = 1 << k
    f = [round(rng.uniform(-5.0, 5.0), 3) for _ in range(size)]
    for m in range(size):
        for i in range(k):
            if m >> i & 1:
                f[m] = max(f[m], f[m ^ (1 << i)])
    flip = rng.randrange(size)
    return HypercubeFunction(k=k, table=[f[m ^ flip] for m in range(size)])


def random_size_scheme(rng, k: int) -> list[float]:
    """Random nonnegative per-size weights normalized to total subset mass 1."""
    raw = [rng.uniform(0.05, 1.0) for _ in range(k)]
    total = sum(math.comb(k - 1, s) * w for s, w in enumerate(raw))
    return [w / total for w in raw]
