"""Comparison metrics between attribution methods, and the hypercube check.

Includes per-feature MAE/RMSE between two attribution tables, absolute global
impacts, a modified Cayley distance between top-n feature rankings (missing
features are appended at the end, in the other ranking's order), and a
brute-force verifier that for monotone functions on the binary hypercube the
summed absolute impacts do not depend on the subset weighting at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Attribution
from .pathdep import subset_weights

ATTRIBUTION_HEADER = "row,expected_value"


@dataclass
class AttributionTable:
    """Rectangular table: one attribution row per data point, one method."""

    method: str
    values: np.ndarray          # shape (rows, num_features)
    expected_values: np.ndarray  # shape (rows,)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.expected_values = np.asarray(self.expected_values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if self.expected_values.shape != (self.values.shape[0],):
            raise ValueError("one expected value per row required")

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_features(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_attributions(cls, rows: Sequence[Attribution]) -> "AttributionTable":
        if not rows:
            raise ValueError("empty attribution list")
        methods = {a.method for a in rows}
        if len(methods) > 1:
            raise ValueError(f"mixed methods in one table: {sorted(methods)}")
        return cls(method=rows[0].method,
                   values=[[float(v) for v in a.values] for a in rows],
                   expected_values=[float(a.expected_value) for a in rows])

    def to_csv(self) -> str:
        n = self.num_features
        lines = [ATTRIBUTION_HEADER + "," + ",".join(f"phi_{i}" for i in range(n))]
        for r in range(self.num_rows):
            cells = [str(r), "%.17g" % self.expected_values[r]]
            cells += ["%.17g" % v for v in self.values[r]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, method: str = "unknown") -> "AttributionTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith(ATTRIBUTION_HEADER):
            raise ValueError("not an attribution CSV")
        n = len(lines[0].split(",")) - 2
        values, evs = [], []
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != n + 2:
                raise ValueError("ragged attribution CSV")
            evs.append(float(parts[1]))
            values.append([float(p) for p in parts[2:]])
        return cls(method=method, values=values, expected_values=evs)


def global_impact(table: AttributionTable, mean: bool = False) -> np.ndarray:
    """Per-feature sum (or mean) of absolute attributions over the dataset."""
    if table.num_rows == 0:
        raise ValueError("empty table")
    out = np.abs(table.values).sum(axis=0)
    return out / table.num_rows if mean else out


def error_metrics(a: AttributionTable, b: AttributionTable
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (MAE, RMSE) between two tables of identical shape."""
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")
    diff = a.values - b.values
    mae = np.abs(diff).mean(axis=0)
    rmse = np.sqrt((diff ** 2).mean(axis=0))
    return mae, rmse


# ---------------------------------------------------------------------------
# ranking distance
# ---------------------------------------------------------------------------

def _top_features(values: Sequence[float], top_n: int) -> list[int]:
    order = sorted(range(len(values)), key=lambda i: (-abs(values[i]), i))
    return order[:top_n]


def modified_cayley(a_values: Sequence[float], b_values: Sequence[float],
                    top_n: int) -> int:
    """Transposition distance between the two top-n rankings by |value|.

    Ties rank by ascending feature index.  Features present in only one top-n
    list are appended to the other list in their own list's order, so both
    orderings cover the union; the distance is then union size minus the
    number of cycles of the relating permutation.
    """
    if len(a_values) != len(b_values):
        raise ValueError("value vectors must have the same length")
    if not 1 <= top_n <= len(a_values):
        raise ValueError("top_n out of range")
    a_top = _top_features(a_values, top_n)
    b_top = _top_features(b_values, top_n)
    a_ext = a_top + [f for f in b_top if f not in set(a_top)]
    b_ext = b_top + [f for f in a_top if f not in set(b_top)]
    pos_b = {f: i for i, f in enumerate(b_ext)}
    perm = [pos_b[f] for f in a_ext]
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return len(perm) - cycles


def average_modified_cayley(a: AttributionTable, b: AttributionTable,
                            top_n: int) -> float:
    """Row-averaged modified Cayley distance between two tables."""
    if a.values.shape != b.values.shape:
        raise ValueError("shape mismatch")
    total = sum(modified_cayley(a.values[r], b.values[r], top_n)
                for r in range(a.num_rows))
    return total / a.num_rows


# ---------------------------------------------------------------------------
# functions on the binary hypercube
# ---------------------------------------------------------------------------

MAX_HYPERCUBE_TABLE = 16   # table storage bound
MAX_HYPERCUBE_BRUTE = 12   # brute-force impact bound


@dataclass(eq=False)
class HypercubeFunction:
    """A function on {0,1}^k, tabulated in binary order (bit i = coordinate i)."""

    k: int
    table: np.ndarray

    def __post_init__(self):
        if not 1 <= self.k <= MAX_HYPERCUBE_TABLE:
            raise ValueError(f"k must be in [1, {MAX_HYPERCUBE_TABLE}]")
        self.table = np.asarray(self.table, dtype=np.float64)
        if self.table.shape != (1 << self.k,):
            raise ValueError(f"table must have exactly 2^{self.k} entries")


def is_monotone(f: HypercubeFunction) -> list[bool]:
    """Per feature: do all flip differences f(x) - f(x without i) share a sign?

    Zero differences are compatible with either sign.
    """
    idx = np.arange(1 << f.k)
    out = []
    for i in range(f.k):
        bit = 1 << i
        hi = idx[(idx & bit) != 0]
        diffs = f.table[hi] - f.table[hi ^ bit]
        out.append(bool((diffs >= 0).all() or (diffs <= 0).all()))
    return out


def flip_impacts(f: HypercubeFunction) -> np.ndarray:
    """Per feature: half the summed absolute flip differences over all points."""
    idx = np.arange(1 << f.k)
    out = np.empty(f.k)
    for i in range(f.k):
        out[i] = 0.5 * np.abs(f.table - f.table[idx ^ (1 << i)]).sum()
    return out


def _group_means(table: np.ndarray, idx: np.ndarray, mask: int, k: int) -> np.ndarray:
    # mean of f over the points that agree with each x on the mask's features
    keys = idx & mask
    sums = np.bincount(keys, weights=table, minlength=len(idx))
    return sums[keys] / (1 << (k - mask.bit_count()))


def _size_marginals(f: HypercubeFunction) -> np.ndarray:
    """M[i, s, x]: sum over size-s subsets S (i not in S) of g(S+i) - g(S) at x."""
    k = f.k
    idx = np.arange(1 << k)
    out = np.zeros((k, k, 1 << k))
    for mask in range(1 << k):
        s = mask.bit_count()
        if s == k:
            continue
        base = _group_means(f.table, idx, mask, k)
        for i in range(k):
            bit = 1 << i
            if mask & bit:
                continue
            out[i, s] += _group_means(f.table, idx, mask | bit, k) - base
    return out


def hypercube_impacts_multi(f: HypercubeFunction, schemes: Sequence
                            ) -> list[np.ndarray]:
    """Summed absolute per-point impacts under several subset weightings.

    Each scheme is "shapley", "banzhaf", or a list of k per-size weights that
    make the subset weights sum to 1.  Marginal tables are shared across
    schemes.
    """
    if f.k > MAX_HYPERCUBE_BRUTE:
        raise ValueError(f"brute force limited to k <= {MAX_HYPERCUBE_BRUTE}")
    marginals = _size_marginals(f)
    results = []
    for scheme in schemes:
        w = np.asarray(subset_weights(scheme, f.k), dtype=np.float64)
        per_point = np.tensordot(w, marginals, axes=([0], [1]))  # (k, 2^k)
        results.append(np.abs(per_point).sum(axis=1))
    return results


def hypercube_impacts(f: HypercubeFunction, scheme) -> np.ndarray:
    """Summed absolute per-point impacts under one subset weighting."""
    return hypercube_impacts_multi(f, [scheme])[0]
