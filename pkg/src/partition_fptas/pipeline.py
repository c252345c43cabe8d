"""Partition approximation: reduction to RP subproblems and back.

Stages, in order: trivial case, tiny-item merging, global scaling to
``[E', E'^2]``, dyadic magnitude classes ``X_α``, per-class RP windows,
mirroring of the lower half, additive combination across classes, and
selection plus witness recovery.  All error terms are tracked as explicit
integers in scaled units so the internal precision ``E' = K E`` can be
chosen per instance.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import stats
from .intset import INT64_MAX, IntegerSet, sumset_arrays
from .reduced import RpInstance, explicit_error_bound, recover_subset, solve_rp

#: Largest power-of-two multiplier tried for the internal precision.
MAX_K_EXP = 48
#: combine_additive runs at precision COMBINE_FACTOR * E (a quarter of the budget).
COMBINE_FACTOR = 16


class LimitError(OverflowError):
    """Instance or precision outside the supported integer range."""


@dataclass(frozen=True)
class PartitionInstance:
    values: tuple[int, ...]
    epsilon_inv: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if any(v < 1 for v in self.values):
            raise ValueError("values must be positive integers")
        if int(self.epsilon_inv) < 2:
            raise ValueError("epsilon_inv must be at least 2")
        if sum(self.values) > INT64_MAX:
            raise LimitError("total exceeds the 64-bit range")

    @property
    def total(self) -> int:
        return sum(self.values)


@dataclass
class IndexMap:
    """Original indices behind each transformed element."""

    groups: list[tuple[int, ...]]

    def expand(self, picked: Sequence[int]) -> list[int]:
        out = []
        for j in picked:
            out.extend(self.groups[j])
        return sorted(out)


@dataclass
class PartitionSolution:
    subset_indices: list[int]
    achieved_sum: int
    epsilon_inv: int
    total: int
    method: str = "fptas"
    error_budget: dict | None = None

    @property
    def opt_lower_bound_factor(self) -> Fraction:
        return Fraction(self.epsilon_inv - 1, self.epsilon_inv)


# ---------------------------------------------------------------- stages


def trivial_case(inst: PartitionInstance) -> PartitionSolution | None:
    """Exact answer ``X minus max(X)`` when ``max(X) >= 3/4 Σ(X)``."""
    vals = inst.values
    total = inst.total
    if not vals:
        return PartitionSolution([], 0, inst.epsilon_inv, 0, "trivial")
    top = max(range(len(vals)), key=lambda i: (vals[i], -i))
    if 4 * vals[top] < 3 * total:
        return None
    rest = [i for i in range(len(vals)) if i != top]
    return PartitionSolution(rest, total - vals[top], inst.epsilon_inv, total, "trivial")


def merge_tiny(values: Sequence[int], eps_t) -> tuple[list[int], IndexMap]:
    """Pack items below ``eps_t`` (ascending) into groups with sums in ``[eps_t, 2 eps_t)``.

    The leftover group, whose sum is below ``eps_t``, is dropped.
    """
    eps_t = Fraction(eps_t)
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    out, groups = [], []
    run, acc = [], 0
    for i in order:
        x = values[i]
        if x >= eps_t:
            out.append(x)
            groups.append((i,))
            continue
        run.append(i)
        acc += x
        if acc >= eps_t:
            out.append(acc)
            groups.append(tuple(run))
            run, acc = [], 0
    return out, IndexMap(groups)


def scale_round(values: Sequence[int], E: int, t) -> list[int]:
    """``floor(x E^2 / t)`` in exact arithmetic; ``t`` may be a half-integer."""
    t = Fraction(t)
    num, den = E * E * t.denominator, t.numerator
    return [x * num // den for x in values]


def partition_by_magnitude(values: Sequence[int], E: int) -> dict[int, list[int]]:
    """Indices of ``values`` grouped by the dyadic window ``[αE, 2αE)`` they fall in."""
    out: dict[int, list[int]] = {}
    for i, x in enumerate(values):
        if x < E:
            raise ValueError(f"value {x} is below E={E}")
        alpha = 1 << ((x // E).bit_length() - 1)
        out.setdefault(alpha, []).append(i)
    return dict(sorted(out.items()))


def mirror_upper(s, sigma: int) -> IntegerSet:
    a = s.elements if hasattr(s, "elements") else IntegerSet(s).elements
    if len(a) and int(a[-1]) > sigma:
        raise ValueError("mirror needs elements <= sigma")
    return IntegerSet._wrap((sigma - a[::-1]).copy())


# ---------------------------------------------------------------- windows


@dataclass
class Window:
    """One RP call covering the x'-sum range around ``[βE', 2βE']``."""

    beta: int
    m: int
    hi: int
    items: np.ndarray
    rp_error: int
    error: int
    exact: bool


@dataclass
class AlphaPlan:
    alpha: int
    indices: list[int]  # into the scaled instance
    values: list[int]
    sigma: int
    windows: list[Window]
    enumerate: bool

    @property
    def error(self) -> int:
        return max((w.error for w in self.windows), default=0)


def _uses_exact(U: int, n: int) -> bool:
    return n < 2 or U <= 8 * math.log2(n)


def plan_alpha(values: Sequence[int], indices: Sequence[int], alpha: int, E: int) -> AlphaPlan:
    """Windows for class ``X_α`` and their explicit error bounds (no solving)."""
    x = np.asarray(values, dtype=np.int64)
    sigma = int(x.sum())
    n = len(x)
    windows = []
    m = 1
    while True:
        beta = alpha * m
        items = (x * m) // E
        total = int(items.sum())
        if total < 4 * m * beta:
            break
        windows.append([beta, m, items, total])
        m *= 2
    out = []
    for j, (beta, m, items, total) in enumerate(windows):
        hi = 2 * m * beta + 3 * m + 3
        if j == len(windows) - 1:
            hi = max(hi, -(-sigma * m // (2 * E)) + 3 * m + 3)
        hi = min(hi, total)
        exact = _uses_exact(beta, n)
        rp_err = 0 if exact else explicit_error_bound(beta, n, hi)
        ymax = (hi + rp_err) // beta
        err = -(-(rp_err + ymax) * E // m) + 1
        out.append(Window(beta, m, hi, items, rp_err, err, exact))
    return AlphaPlan(alpha, list(indices), list(values), sigma, out, enumerate=not out)


@dataclass
class Plan:
    E: int
    K: int
    E_int: int
    sigma: int
    scaled: list[int]
    index_map: IndexMap
    alphas: list[AlphaPlan]
    tiny_error: int
    scaling_error: int
    combine_delta: int
    u: int

    @property
    def combine_error(self) -> int:
        return len(self.alphas) * self.combine_delta

    @property
    def total_error(self) -> int:
        return self.tiny_error + self.scaling_error + sum(a.error for a in self.alphas) + self.combine_error

    def fits(self) -> bool:
        return 4 * self.E * self.total_error <= self.E_int**2


def make_plan(values: Sequence[int], E: int, K: int) -> Plan:
    Ei = K * E
    sigma = sum(values)
    if 4 * Ei * Ei > INT64_MAX:
        raise LimitError(f"internal precision {Ei} exceeds the 64-bit range")
    merged, imap = merge_tiny(values, Fraction(sigma, 2 * Ei))
    tiny = 2 * Ei if len(imap.groups) < len(values) or any(len(g) > 1 for g in imap.groups) else 0
    scaled = scale_round(merged, Ei, Fraction(sigma, 2))
    classes = partition_by_magnitude(scaled, Ei)
    alphas = [plan_alpha([scaled[i] for i in idx], idx, a, Ei) for a, idx in classes.items()]
    u = sum(scaled)
    ell = max(1, len(alphas))
    delta = max(1, u // (2 * ell * COMBINE_FACTOR * E))
    return Plan(E, K, Ei, sigma, scaled, imap, alphas, tiny, len(scaled), delta, u)


def choose_plan(values: Sequence[int], E: int, max_internal: int | None = None) -> Plan:
    """Smallest power-of-two ``K`` whose explicit error total fits ``Σ/(8E)``.

    ``max_internal`` caps ``E' = K E``; memory and time grow roughly
    linearly in ``E'``.
    """
    for k in range(MAX_K_EXP + 1):
        if max_internal is not None and (E << k) > max_internal:
            raise LimitError(f"internal precision {E << k} exceeds the limit {max_internal}")
        plan = make_plan(values, E, 1 << k)
        if plan.fits():
            return plan
    raise LimitError("no internal precision satisfies the error budget")


# ---------------------------------------------------------------- per class


@dataclass
class AlphaResult:
    """Approximate subset sums of one class over ``[0, σ]`` with recovery data."""

    plan: AlphaPlan
    elements: np.ndarray
    source: np.ndarray  # index into entries
    entries: list = field(default_factory=list)
    rp_results: list = field(default_factory=list)

    def recover(self, v: int) -> list[int]:
        """Local indices (into ``plan.values``) of a subset realising ``v`` approximately."""
        j = int(np.searchsorted(self.elements, v))
        if j >= len(self.elements) or int(self.elements[j]) != v:
            raise ValueError(f"{v} is not in the class set")
        kind, payload, mirrored = self.entries[int(self.source[j])]
        if kind == "direct":
            local = list(payload)
        else:
            w, s = payload
            local = recover_subset(self.rp_results[w], s)
        if mirrored:
            taken = set(local)
            local = [i for i in range(len(self.plan.values)) if i not in taken]
        return local


def _mul_div(a: np.ndarray, num: int, den: int) -> np.ndarray:
    """Elementwise ``floor(a * num / den)`` without int64 overflow."""
    q, r = divmod(num, den)
    top = int(a.max()) if len(a) else 0
    if top * max(q, r, 1) <= INT64_MAX // 2:
        return a * q + (a * r) // den
    return np.array([int(v) * num // den for v in a.tolist()], dtype=np.int64)


def solve_alpha(plan: AlphaPlan, E: int, c=1, rp_results: list | None = None) -> AlphaResult:
    """Approximate ``S_{X_α}`` on ``[0, σ]`` from the planned windows.

    ``rp_results`` may carry already solved RP instances, one per window.
    """
    vals = plan.values
    entries = []
    parts, srcs = [], []

    def add(arr, entry_ids):
        parts.append(np.asarray(arr, dtype=np.int64))
        srcs.append(np.asarray(entry_ids, dtype=np.int64))

    if plan.enumerate:
        sums = {}
        for mask in range(1 << len(vals)):
            s = sum(vals[i] for i in range(len(vals)) if mask >> i & 1)
            sums.setdefault(s, mask)
        keys = sorted(sums)
        for s in keys:
            mask = sums[s]
            entries.append(("direct", tuple(i for i in range(len(vals)) if mask >> i & 1), False))
        add(keys, range(len(keys)))
        rp_results = []
    else:
        low = plan.alpha * E
        entries.append(("direct", (), False))
        add([0], [0])
        for i, x in enumerate(vals):
            if x == low:
                entries.append(("direct", (i,), False))
                add([x], [len(entries) - 1])
                break
        if rp_results is None:
            rp_results = [solve_rp(_rp_instance(w, c)) for w in plan.windows]
        for w, (win, res) in enumerate(zip(plan.windows, rp_results)):
            s = res.approx_set.elements
            s = s[s > 0]
            v = _mul_div(s, E, win.m)
            base = len(entries)
            entries.extend(("rp", (w, int(x)), False) for x in s.tolist())
            add(v, range(base, base + len(s)))
        # upper half by symmetry
        half = np.concatenate(parts)
        hsrc = np.concatenate(srcs)
        keep = half <= plan.sigma
        half, hsrc = half[keep], hsrc[keep]
        base = len(entries)
        entries.extend((k, p, True) for k, p, _ in (entries[i] for i in hsrc.tolist()))
        add(plan.sigma - half, range(base, base + len(half)))
    allv = np.concatenate(parts)
    alls = np.concatenate(srcs)
    vals_u, first = np.unique(allv, return_index=True)
    return AlphaResult(plan, vals_u, alls[first], entries, rp_results)


def _rp_instance(w: Window, c) -> RpInstance:
    return RpInstance(tuple(w.items.tolist()), w.beta, w.m, Fraction(c), w.hi)


# ---------------------------------------------------------------- combination


@dataclass
class Combination:
    """Capped sumset of rounded class sets, kept level by level for recovery."""

    delta: int
    cap: int
    rounded: list[np.ndarray]  # grid values per class (each contains 0)
    reps: list[np.ndarray]  # representative original element per grid value
    prefix: list[np.ndarray]

    @property
    def grid(self) -> np.ndarray:
        return self.prefix[-1]

    def values(self) -> IntegerSet:
        return IntegerSet._wrap(self.prefix[-1] * self.delta)

    def decompose(self, g: int) -> list[int]:
        """Representative elements, one per class, whose grid values sum to ``g``."""
        out = [0] * len(self.rounded)
        for j in range(len(self.rounded) - 1, 0, -1):
            r = self.rounded[j]
            cand = g - r
            ok = cand >= 0
            pos = np.searchsorted(self.prefix[j - 1], cand)
            pos = np.minimum(pos, len(self.prefix[j - 1]) - 1)
            ok &= self.prefix[j - 1][pos] == cand
            k = int(np.argmax(ok))
            if not ok[k]:
                raise RuntimeError(f"grid value {g} has no decomposition")
            out[j] = int(self.reps[j][k])
            g -= int(r[k])
        k = int(np.searchsorted(self.rounded[0], g))
        if k >= len(self.rounded[0]) or int(self.rounded[0][k]) != g:
            raise RuntimeError("grid decomposition failed at the first class")
        out[0] = int(self.reps[0][k])
        return out


def combine(sets: Sequence[np.ndarray], u: int, delta: int) -> Combination:
    cap = u // delta
    rounded, reps = [], []
    for a in sets:
        a = np.union1d(np.asarray(a, dtype=np.int64), [0])
        a = a[a <= u]
        g = a // delta
        # keep the largest element per grid cell as representative
        last = np.r_[g[1:] != g[:-1], True]
        rounded.append(g[last])
        reps.append(a[last])
    prefix = [rounded[0]]
    for g in rounded[1:]:
        prefix.append(sumset_arrays(prefix[-1], g, cap))
    return Combination(delta, cap, rounded, reps, prefix)


def combine_additive(sets, u: int, E: int) -> IntegerSet:
    """Approximate ``(A_1 + ... + A_ℓ)[0, u]`` with additive error at most ``u/E``.

    Every set is taken together with 0, so the result covers all sub-sums.
    """
    arrays = [s.elements if hasattr(s, "elements") else IntegerSet(s).elements for s in sets]
    if not arrays:
        raise ValueError("combine_additive needs at least one set")
    delta = max(1, u // (2 * len(arrays) * E))
    return combine(arrays, u, delta).values()


# ---------------------------------------------------------------- driver


def select_and_recover(comb: Combination, results: list[AlphaResult], plan: Plan,
                       inst: PartitionInstance) -> PartitionSolution:
    """Pick the largest sum within ``(1 + ε/4) t'`` and trace it back to ``X``."""
    E, Ei = plan.E, plan.E_int
    limit = (4 * E + 1) * Ei * Ei // (4 * E)
    grid = comb.grid
    k = int(np.searchsorted(grid, limit // comb.delta, side="right")) - 1
    g = int(grid[max(k, 0)])
    reps = comb.decompose(g)
    picked = []
    for res, v in zip(results, reps):
        local = res.recover(v)
        picked.extend(res.plan.indices[i] for i in local)
    original = plan.index_map.expand(picked)
    vals = inst.values
    s = sum(vals[i] for i in original)
    total = inst.total
    if 2 * s > total:
        chosen = set(original)
        original = [i for i in range(len(vals)) if i not in chosen]
        s = total - s
    return PartitionSolution(original, s, E, total, "fptas", error_budget_report(plan))


def error_budget_report(plan: Plan) -> dict:
    """Per-stage additive errors in scaled and original units."""
    unit = Fraction(plan.sigma, 2 * plan.E_int**2)
    stages = {
        "tiny_merge": plan.tiny_error,
        "scaling": plan.scaling_error,
        "windows": sum(a.error for a in plan.alphas),
        "combine": plan.combine_error,
    }
    return {
        "K": plan.K,
        "internal_epsilon_inv": plan.E_int,
        "classes": len(plan.alphas),
        "windows": sum(len(a.windows) for a in plan.alphas),
        "scaled_units": stages,
        "scaled_total": plan.total_error,
        "scaled_budget": plan.E_int**2 // (4 * plan.E),
        "original_units": {k: float(v * unit) for k, v in stages.items()},
        "original_total": float(plan.total_error * unit),
        "original_budget": float(Fraction(plan.sigma, 8 * plan.E)),
    }


def solve_partition(inst: PartitionInstance, c=1, threads: int = 1,
                    counters: stats.Counters | None = None, timings: dict | None = None,
                    max_internal: int | None = None) -> PartitionSolution:
    """(1 - 1/E)-approximate Partition with a witness subset.

    ``timings``, when given, receives wall seconds per stage.
    """
    clock = _Clock(timings)
    sol = trivial_case(inst)
    if sol is not None:
        return sol
    E = inst.epsilon_inv
    plan = choose_plan(inst.values, E, max_internal)
    clock.lap("plan")
    tasks = [(a, w) for a, ap in enumerate(plan.alphas) for w in ap.windows]
    solved = _run_rp(tasks, c, threads, counters)
    clock.lap("rp")
    results, pos = [], 0
    for ap in plan.alphas:
        k = len(ap.windows)
        results.append(solve_alpha(ap, plan.E_int, c, solved[pos : pos + k]))
        pos += k
    clock.lap("classes")
    comb = combine([r.elements for r in results], plan.u, plan.combine_delta)
    clock.lap("combine")
    sol = select_and_recover(comb, results, plan, inst)
    clock.lap("recover")
    return sol


class _Clock:
    def __init__(self, sink):
        self.sink = sink
        self.t = time.perf_counter()

    def lap(self, name):
        if self.sink is not None:
            now = time.perf_counter()
            self.sink[name] = self.sink.get(name, 0.0) + now - self.t
            self.t = now


def _solve_task(task, c):
    with stats.collecting() as local:
        res = solve_rp(_rp_instance(task[1], c))
    return res, local


def _run_rp(tasks, c, threads, counters):
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(lambda t: _solve_task(t, c), tasks))
    else:
        outs = [_solve_task(t, c) for t in tasks]
    sink = counters if counters is not None else stats.current()
    if sink is not None:
        for _, local in outs:
            sink.merge(local)
    return [res for res, _ in outs]
