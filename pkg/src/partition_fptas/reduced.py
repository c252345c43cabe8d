"""Solver for the reduced problem RP(μ, m).

Input items lie in ``[U, 2U)`` with ``U = 1/μ``.  Subset sums are built
bottom-up in a binary tree of ⊕_μ combinations.  Once a level has
produced enough output (the size threshold), the remaining pairs of that
level are replaced by cheap fallback sets.  The tree is kept so that any
element of the result can be traced back to a subset of the items.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import stats
from .canonical import MuCanonicalSet, check_precision, oplus_mu, recover_pair, round_canonical_array
from .intset import IntegerSet

#: Levels with fewer than this many pairs per level index skip the threshold.
SMALL_LEVEL_FACTOR = 24


class RpError(ValueError):
    pass


def ceil_log2(x: int) -> int:
    return (int(x) - 1).bit_length() if x > 1 else 0


@dataclass(frozen=True)
class RpInstance:
    """Items in ``[U, 2U)`` whose subset sums are wanted on ``[mU, hi]``.

    ``hi`` defaults to ``2mU``; callers stitching windows together may
    widen it.  ``c`` is the size-threshold constant, kept rational.
    """

    items: tuple[int, ...]
    U: int
    m: int
    c: Fraction = Fraction(1)
    hi: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(int(x) for x in self.items))
        object.__setattr__(self, "c", Fraction(self.c))
        n, U, m = len(self.items), int(self.U), int(self.m)
        if U < 1:
            raise RpError("U must be positive")
        if not self.items:
            raise RpError("RP instance needs at least one item")
        if not 1 <= m <= n:
            raise RpError(f"need 1 <= m <= n, got m={m}, n={n}")
        if min(self.items) < U or max(self.items) >= 2 * U:
            raise RpError(f"items must lie in [{U}, {2 * U})")
        if sum(self.items) < 4 * m * U:
            raise RpError("item total is below 4mU")
        if self.c <= 0:
            raise RpError("threshold constant must be positive")
        if self.hi is not None and self.hi < 2 * m * U:
            raise RpError("hi must be at least 2mU")

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def upper(self) -> int:
        return 2 * self.m * self.U if self.hi is None else int(self.hi)

    def threshold(self, h: int) -> int:
        """Output size at which level ``h`` stops computing exact pairs."""
        c = self.c
        num = 128 * c.numerator * self.n * h * self.U * ceil_log2(self.U)
        den = c.denominator * self.m
        return max(1, -(-num // den))

    def uses_exact_path(self) -> bool:
        return self.n < 2 or self.U <= 8 * math.log2(self.n)


@dataclass
class Node:
    """A tree node: its set and how it was produced.

    ``kind`` is ``"leaf"``, ``"pair"`` (⊕_μ of two children),
    ``"fallback"`` (left child plus the rounded sum of both maxima) or
    ``"pass"`` (an unpaired node carried up unchanged).
    """

    set: MuCanonicalSet
    kind: str
    children: tuple[int, ...] = ()
    item: int = -1
    maxima: tuple[int, int] = (0, 0)


@dataclass
class LevelResult:
    sets: list[MuCanonicalSet]
    stopped: bool

    @property
    def prefix(self) -> list[int]:
        """1-based indices of the computed pairs when the level stopped early."""
        return list(range(1, len(self.sets) + 1))


def compute_level(nodes: Sequence[MuCanonicalSet], inst: RpInstance, h: int,
                  use_threshold: bool = True, cap: int | None = None) -> LevelResult:
    """Compute ``B_i = A_{2i-1} ⊕_μ A_{2i}`` left to right.

    Stops as soon as the running output size reaches the level threshold;
    the result then holds only the computed prefix.
    """
    if len(nodes) % 2:
        raise RpError("compute_level needs an even number of nodes")
    if h < 1:
        raise RpError("level index starts at 1")
    U = nodes[0].U if nodes else inst.U
    if any(a.U != U for a in nodes):
        raise ValueError("precision mismatch among nodes")
    ell = len(nodes) // 2
    limit = inst.threshold(h) if use_threshold else None
    out = []
    total = 0
    for i in range(ell):
        b = oplus_mu(nodes[2 * i], nodes[2 * i + 1], cap)
        out.append(b)
        total += len(b)
        if limit is not None and total >= limit:
            return LevelResult(out, stopped=i + 1 < ell)
    return LevelResult(out, stopped=False)


def fallback_set(left: MuCanonicalSet, right: MuCanonicalSet, cap: int | None = None) -> MuCanonicalSet:
    """Left set plus the canonical rounding of ``max(left) + max(right)``."""
    point = left.max() + right.max()
    a = left.elements
    if cap is None or point <= cap:
        p = round_canonical_array(np.array([point], dtype=np.int64), left.U)
        a = np.union1d(a, p)
    return MuCanonicalSet._build(a, left.U)


def compute_level_with_fallback(nodes: Sequence[MuCanonicalSet], inst: RpInstance, h: int,
                                use_threshold: bool = True, cap: int | None = None) -> list[Node]:
    """Sets ``Z_1..Z_ℓ`` for the next level, with provenance."""
    level = compute_level(nodes, inst, h, use_threshold, cap)
    out = [Node(b, "pair", (2 * i, 2 * i + 1)) for i, b in enumerate(level.sets)]
    if level.stopped:
        counters = stats.current()
        if counters is not None:
            counters.levels_early_stopped += 1
            counters.fallback_nodes += len(nodes) // 2 - len(out)
        for i in range(len(out), len(nodes) // 2):
            a, b = nodes[2 * i], nodes[2 * i + 1]
            z = fallback_set(a, b, cap)
            out.append(Node(z, "fallback", (2 * i, 2 * i + 1), maxima=(a.max(), b.max())))
    return out


@dataclass
class RpResult:
    approx_set: IntegerSet
    error_bound: int
    instance: RpInstance
    levels: list[list[Node]] = field(default_factory=list)
    exact: bool = False
    early_stops: int = 0

    def recover(self, s: int) -> list[int]:
        return recover_subset(self, s)


def explicit_error_bound(U: int, n: int, v: int) -> int:
    """``ceil(2 (1 - (1 - 2/U)^ceil(log n)) v)``: additive error on ``[., v]``."""
    L = ceil_log2(n)
    mu = 1 - Fraction(U - 2, U) ** L
    return math.ceil(2 * mu * v)


def solve_rp(inst: RpInstance) -> RpResult:
    """Approximate the subset sums of ``inst.items`` on ``[mU, hi]``."""
    counters = stats.current()
    if counters is not None:
        counters.rp_instances += 1
    hi = inst.upper
    if inst.uses_exact_path():
        if counters is not None:
            counters.rp_exact_paths += 1
        return _exact_result(inst, _ExactSums(inst.items, hi))
    U = check_precision(inst.U)
    levels = [[Node(MuCanonicalSet._build(np.array([x], dtype=np.int64), U), "leaf", item=i)
               for i, x in enumerate(inst.items)]]
    stops = 0
    for h in range(1, ceil_log2(inst.n) + 1):
        prev = levels[-1]
        even = len(prev) - len(prev) % 2
        ell = even // 2
        use_threshold = ell >= SMALL_LEVEL_FACTOR * h
        nodes = compute_level_with_fallback([nd.set for nd in prev[:even]], inst, h, use_threshold, hi)
        if any(nd.kind == "fallback" for nd in nodes):
            stops += 1
        if len(prev) % 2:
            nodes.append(Node(prev[-1].set, "pass", (len(prev) - 1,)))
        levels.append(nodes)
    root = levels[-1][0].set
    approx = root.base if root.max() <= hi else IntegerSet._wrap(root.restricted(hi).elements)
    bound = explicit_error_bound(U, inst.n, hi)
    return RpResult(approx, bound, inst, levels, exact=False, early_stops=stops)


def recover_subset(result: RpResult, s: int) -> list[int]:
    """Indices of items whose sum lies in ``[s, s + error_bound]``."""
    s = int(s)
    if s not in result.approx_set:
        raise ValueError(f"{s} is not in the approximate set")
    if result.exact:
        return result._exact.recover(s)
    picked = []
    top = len(result.levels) - 1
    stack = [(top, 0, s)]
    while stack:
        lvl, idx, value = stack.pop()
        node = result.levels[lvl][idx]
        if node.kind == "leaf":
            assert value == result.instance.items[node.item]
            picked.append(node.item)
            continue
        if node.kind == "pass":
            stack.append((lvl - 1, node.children[0], value))
            continue
        if node.kind == "pair":
            a, b = recover_pair(node.set, value)
        else:
            left = result.levels[lvl - 1][node.children[0]].set
            if value in left:
                a, b = value, 0
            else:
                a, b = node.maxima
        if b:
            stack.append((lvl - 1, node.children[1], b))
        if a:
            stack.append((lvl - 1, node.children[0], a))
    return sorted(picked)


class _ExactSums:
    """Capped subset sums of items with repeated values, plus recovery.

    Equal items are merged into binary pieces (1, 2, 4, ... copies) so the
    shift-or pass costs one step per piece instead of one per item.
    """

    def __init__(self, items: Sequence[int], cap: int):
        self.cap = cap
        groups: dict[int, list[int]] = {}
        for i, x in enumerate(items):
            groups.setdefault(int(x), []).append(i)
        self.pieces = []
        for value in sorted(groups):
            idx = groups[value]
            usable = min(len(idx), cap // value) if value else 0
            start, size = 0, 1
            while start < usable:
                take = min(size, usable - start)
                self.pieces.append((value * take, idx[start : start + take]))
                start += take
                size *= 2
        mask = (1 << (cap + 1)) - 1
        bits = 1
        self.layers = [bits]
        for weight, _ in self.pieces:
            bits |= (bits << weight) & mask
            self.layers.append(bits)
        from .oracle import _bits_to_array

        self.set = IntegerSet._wrap(_bits_to_array(bits))

    def recover(self, s: int) -> list[int]:
        picked = []
        for k in range(len(self.pieces) - 1, -1, -1):
            if s == 0:
                break
            if not (self.layers[k] >> s) & 1:
                weight, idx = self.pieces[k]
                picked.extend(idx)
                s -= weight
        assert s == 0
        return sorted(picked)


def _exact_result(inst: RpInstance, sums: _ExactSums) -> RpResult:
    res = RpResult(sums.set, 0, inst, [], exact=True)
    res._exact = sums
    return res
