"""Exact ground truth and approximation checkers.

Subset sums are computed with a word-parallel shift-or over Python
integers used as bitsets.  Small instances can also be enumerated
exhaustively, which is how the bitset engine itself is checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .intset import INT64_MAX, IntegerSet

#: Largest cap the bitset engine accepts by default (bits).
MAX_CAP = 10**8
#: Exhaustive enumeration limit for :func:`exact_partition_opt`.
MAX_EXHAUSTIVE_N = 24


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class ApproxSpec:
    """Either ``factor=1-mu`` or ``additive=delta`` on the interval ``[w, v]``."""

    mu: Fraction | None = None
    delta: Fraction | None = None
    w: Fraction | float = float("-inf")
    v: Fraction | float = float("inf")

    def __post_init__(self):
        if (self.mu is None) == (self.delta is None):
            raise ValueError("give exactly one of mu or delta")
        # mu = 1 (factor 0) only asks for one-sided neighbours; it appears
        # for U = 2 in the 1 - 2/U contract of ⊕_μ
        if self.mu is not None and not (0 < self.mu <= 1):
            raise ValueError("factor mode needs 0 < mu <= 1")
        if self.delta is not None and self.delta < 0:
            raise ValueError("additive mode needs delta >= 0")

    @classmethod
    def factor(cls, mu, w=float("-inf"), v=float("inf")):
        return cls(mu=Fraction(mu), w=w, v=v)

    @classmethod
    def additive(cls, delta, w=float("-inf"), v=float("inf")):
        return cls(delta=Fraction(delta), w=w, v=v)


@dataclass(frozen=True)
class Violation:
    clause: str
    element: int

    def __str__(self):
        return f"clause ({self.clause}) fails at {self.element}"


def _bits_to_array(bits: int) -> np.ndarray:
    if bits == 0:
        return np.empty(0, dtype=np.int64)
    raw = np.frombuffer(bits.to_bytes((bits.bit_length() + 7) // 8, "little"), dtype=np.uint8)
    return np.flatnonzero(np.unpackbits(raw, bitorder="little")).astype(np.int64)


def _sum_bits(values: Sequence[int], cap: int) -> int:
    mask = (1 << (cap + 1)) - 1
    bits = 1
    for x in values:
        if x <= cap:
            bits |= (bits << x) & mask
    return bits


def exact_subset_sums(values: Sequence[int], cap=None, max_cap: int = MAX_CAP) -> IntegerSet:
    """All subset sums of the multiset ``values`` inside ``[0, cap]``."""
    values = [int(x) for x in values]
    if any(x < 0 for x in values):
        raise ValueError("subset sums need non-negative values")
    total = sum(values)
    cap = total if cap is None or cap == float("inf") else min(int(cap), total)
    if cap > max_cap:
        raise OracleLimitError(f"cap {cap} exceeds the bitset budget {max_cap}")
    return IntegerSet._wrap(_bits_to_array(_sum_bits(values, cap)))


def enumerate_subset_sums(values: Sequence[int], cap=None) -> IntegerSet:
    """Brute-force subset sums; exponential, for cross-checking only."""
    sums = {0}
    for x in values:
        sums |= {s + x for s in sums}
    if cap is not None and cap != float("inf"):
        sums = {s for s in sums if s <= cap}
    return IntegerSet(sums)


def subset_with_sum(values: Sequence[int], target: int) -> list[int] | None:
    """Indices of a subset of ``values`` summing exactly to ``target``."""
    values = [int(x) for x in values]
    if target == 0:
        return []
    mask = (1 << (target + 1)) - 1
    layers = [1]
    for x in values:
        prev = layers[-1]
        layers.append(prev | ((prev << x) & mask) if x <= target else prev)
    if not (layers[-1] >> target) & 1:
        return None
    picked = []
    s = target
    for i in range(len(values) - 1, -1, -1):
        if s == 0:
            break
        if not (layers[i] >> s) & 1:
            picked.append(i)
            s -= values[i]
    return sorted(picked)


def exact_partition_opt(values: Sequence[int], max_sum: int = 10**7) -> tuple[int, list[int]]:
    """Optimal Partition value (largest subset sum <= Σ/2) and a witness."""
    values = [int(x) for x in values]
    total = sum(values)
    half = total // 2
    if total <= max_sum:
        bits = _sum_bits(values, half)
        best = bits.bit_length() - 1
        return best, subset_with_sum(values, best)
    if len(values) <= MAX_EXHAUSTIVE_N:
        return _meet_in_middle(values, half)
    raise OracleLimitError("instance too large for exact partition")


def _half_sums(values):
    sums = np.zeros(1, dtype=np.int64)
    for x in values:
        sums = np.concatenate([sums, sums + x])
    return sums


def _meet_in_middle(values, half):
    k = len(values) // 2
    left, right = values[:k], values[k:]
    ls = _half_sums(left)
    rs = _half_sums(right)
    order = np.argsort(rs, kind="stable")
    rsorted = rs[order]
    j = np.searchsorted(rsorted, half - ls, side="right") - 1
    ok = j >= 0
    totals = np.where(ok, ls + rsorted[np.maximum(j, 0)], -1)
    i = int(np.argmax(totals))
    best = int(totals[i])
    rmask = int(order[j[i]])
    picked = [b for b in range(len(left)) if (i >> b) & 1]
    picked += [k + b for b in range(len(right)) if (rmask >> b) & 1]
    return best, picked


def brute_partition_opt(values: Sequence[int]) -> int:
    """Exhaustive optimum over all subsets; for validating the oracle itself."""
    total = sum(values)
    best = 0
    n = len(values)
    for r in range(n + 1):
        for combo in combinations(values, r):
            s = sum(combo)
            if 2 * s <= total and s > best:
                best = s
    return best


def check_approx(approx, exact, spec: ApproxSpec) -> tuple[bool, Violation | None]:
    """Check both clauses of the factor or additive approximation relation.

    ``approx`` approximates ``exact`` on ``[spec.w, spec.v]``: every exact
    element in the interval has a close approximation (clause i) and every
    approximate element has a close exact element (clause ii).
    """
    a = _as_array(approx)
    s = _as_array(exact)
    w, v = spec.w, spec.v
    lo = 0 if w == float("-inf") else np.searchsorted(s, _ceil(w), side="left")
    hi = len(s) if v == float("inf") else np.searchsorted(s, _floor(v), side="right")
    targets = s[lo:hi]
    if spec.mu is not None:
        num, den = spec.mu.numerator, spec.mu.denominator
        # (i) exists ã with (1-mu)x <= ã <= x: the largest ã <= x suffices
        bad = _clause_i(a, targets, lambda x: _ceil_frac(x * (den - num), den))
        if bad is not None:
            return False, Violation("i", bad)
        # (ii) exists x with ã <= x <= ã/(1-mu): the smallest x >= ã suffices
        if num == den:
            bad = _clause_ii(a, s, lambda y: INT64_MAX)
        else:
            bad = _clause_ii(a, s, lambda y: (y * den) // (den - num))
        if bad is not None:
            return False, Violation("ii", bad)
        return True, None
    d = spec.delta
    bad = _clause_i(a, targets + _floor(d), lambda x: x - 2 * _floor(d), shift=_floor(d))
    if bad is not None:
        return False, Violation("i", bad)
    bad = _clause_ii(a - _floor(d), s, lambda y: y + 2 * _floor(d), shift=_floor(d))
    if bad is not None:
        return False, Violation("ii", bad)
    return True, None


def _clause_i(a, targets, lower_of, shift=0):
    """Every target ``x`` needs an element of ``a`` in ``[lower_of(x), x]``."""
    if len(targets) == 0:
        return None
    if len(a) == 0:
        return int(targets[0]) - shift
    idx = np.searchsorted(a, targets, side="right") - 1
    for pos in np.flatnonzero(idx < 0):
        return int(targets[pos]) - shift
    cand = a[idx]
    for x, c in zip(targets.tolist(), cand.tolist()):
        if c < lower_of(x):
            return x - shift
    return None


def _clause_ii(a, s, upper_of, shift=0):
    """Every element ``y`` of ``a`` needs an element of ``s`` in ``[y, upper_of(y)]``."""
    if len(a) == 0:
        return None
    if len(s) == 0:
        return int(a[0]) + shift
    idx = np.searchsorted(s, a, side="left")
    for y, j in zip(a.tolist(), idx.tolist()):
        if j >= len(s) or int(s[j]) > upper_of(y):
            return y + shift
    return None


def _as_array(x) -> np.ndarray:
    if hasattr(x, "elements"):
        return np.asarray(x.elements, dtype=np.int64)
    return IntegerSet(x).elements


def _floor(x) -> int:
    return int(Fraction(x).__floor__())


def _ceil(x) -> int:
    return int(Fraction(x).__ceil__())


def _ceil_frac(num: int, den: int) -> int:
    return -((-num) // den)
