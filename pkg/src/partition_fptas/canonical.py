"""μ-canonical sets and the approximate sumset ⊕_μ.

Precision is carried as the integer ``U = 1/μ``.  Magnitude segments are
numbered so that segment 0 is ``[0, 2U)`` and segment ``i >= 1`` is
``[2^i U, 2^{i+1} U)``; a set is μ-canonical when every element of segment
``i`` is a multiple of ``2^i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import stats
from .intset import PAIRWISE_LIMIT, IntegerSet, sumset_arrays

# Construction hints stored per output element of ⊕_μ.
FROM_A = 0
FROM_B = 1
A_MAJOR = 2  # floor_k(a) + floor_k(b) with seg(a) == k >= seg(b)
B_MAJOR = 3  # same with seg(b) == k > seg(a)


def check_precision(U: int) -> int:
    U = int(U)
    if U < 2:
        raise ValueError(f"precision U must be >= 2, got {U}")
    return U


def segments(x: np.ndarray, U: int) -> np.ndarray:
    """Segment index of every element of ``x``."""
    q = x // U
    seg = np.zeros(len(x), dtype=np.int64)
    big = q >= 2
    if big.any():
        qb = q[big]
        e = np.frexp(qb.astype(np.float64))[1].astype(np.int64) - 1
        # float rounding can be off by one for q near 2^53 and above
        e -= np.left_shift(np.int64(1), e) > qb
        e += np.left_shift(np.int64(1), e + 1) <= qb
        seg[big] = e
    return seg


def segment_of(x: int, U: int) -> int:
    q = x // U
    return q.bit_length() - 1 if q >= 2 else 0


def round_canonical_array(x: np.ndarray, U: int) -> np.ndarray:
    """Round each element down to a multiple of ``2^seg``; not deduplicated."""
    if len(x) == 0:
        return x
    seg = segments(x, U)
    return x & ~(np.left_shift(np.int64(1), seg) - 1)


def is_canonical_array(x: np.ndarray, U: int) -> bool:
    if len(x) == 0:
        return True
    return bool(np.all(round_canonical_array(x, U) == x))


def is_complete_array(x: np.ndarray, U: int) -> bool:
    if not is_canonical_array(x, U):
        return False
    if len(x) == 0:
        return True
    h = segment_of(int(x[-1]), U)
    if h == 0:
        return True
    present = np.unique(segments(x, U))
    return bool(np.all(np.isin(np.arange(1, h + 1), present)))


@dataclass(frozen=True)
class SumRecord:
    """Operands and per-element hints retained by :func:`oplus_mu`."""

    left: "MuCanonicalSet"
    right: "MuCanonicalSet"
    kind: np.ndarray
    major: np.ndarray


class MuCanonicalSet:
    """A μ-canonical :class:`IntegerSet` with its precision ``U``."""

    __slots__ = ("base", "U", "record", "_complete")

    def __init__(self, base, U: int):
        U = check_precision(U)
        base = base if isinstance(base, IntegerSet) else IntegerSet(base)
        if not is_canonical_array(base.elements, U):
            raise ValueError(f"set is not canonical for U={U}")
        self.base = base
        self.U = U
        self.record = None
        self._complete = None

    @classmethod
    def _build(cls, arr: np.ndarray, U: int, record: SumRecord | None = None):
        obj = cls.__new__(cls)
        obj.base = IntegerSet._wrap(arr)
        obj.U = U
        obj.record = record
        obj._complete = None
        return obj

    @property
    def elements(self) -> np.ndarray:
        return self.base.elements

    @property
    def complete(self) -> bool:
        if self._complete is None:
            self._complete = is_complete_array(self.base.elements, self.U)
        return self._complete

    @property
    def top_level(self) -> int:
        if len(self.base) == 0:
            return 0
        return segment_of(self.base.max(), self.U)

    def __len__(self) -> int:
        return len(self.base)

    def __contains__(self, x) -> bool:
        return x in self.base

    def __iter__(self):
        return iter(self.base)

    def __eq__(self, other) -> bool:
        if isinstance(other, MuCanonicalSet):
            return self.U == other.U and self.base == other.base
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        return f"MuCanonicalSet(U={self.U}, {self.base!r})"

    def tolist(self) -> list[int]:
        return self.base.tolist()

    def max(self) -> int:
        return self.base.max()

    def restricted(self, cap: int) -> "MuCanonicalSet":
        a = self.elements
        k = np.searchsorted(a, cap, side="right")
        if k == len(a):
            return self
        return MuCanonicalSet._build(a[:k], self.U)


def round_to_canonical(s, U: int) -> MuCanonicalSet:
    """μ-canonical set approximating positive set ``s`` with factor ``1 - 1/U``."""
    U = check_precision(U)
    a = s.elements if isinstance(s, (IntegerSet, MuCanonicalSet)) else IntegerSet(s).elements
    if len(a) == 0:
        raise ValueError("cannot round an empty set")
    if a[0] <= 0:
        raise ValueError("round_to_canonical needs positive integers")
    return MuCanonicalSet._build(np.unique(round_canonical_array(a, U)), U)


def validate(s, U: int | None = None) -> bool:
    """True iff ``s`` satisfies the μ-canonical granularity rule."""
    arr, U = _unpack(s, U)
    return is_canonical_array(arr, U)


def validate_complete(s, U: int | None = None) -> bool:
    """True iff ``s`` is μ-canonical with every segment ``1..h`` occupied."""
    arr, U = _unpack(s, U)
    return is_complete_array(arr, U)


def _unpack(s, U):
    if isinstance(s, MuCanonicalSet):
        return s.elements, s.U if U is None else U
    if U is None:
        raise TypeError("precision U required for a plain set")
    arr = s.elements if isinstance(s, IntegerSet) else IntegerSet(s).elements
    return arr, check_precision(U)


def oplus_mu(A: MuCanonicalSet, B: MuCanonicalSet, cap: int | None = None) -> MuCanonicalSet:
    """Approximate ``A ⊕ B`` with factor ``1 - 2/U``, staying μ-canonical.

    Keeps the operands and a per-element construction hint so that
    :func:`recover_pair` can trace any output element back to a pair.
    """
    if A.U != B.U:
        raise ValueError(f"precision mismatch: {A.U} vs {B.U}")
    if len(A) == 0 or len(B) == 0:
        raise ValueError("oplus_mu operands must be non-empty")
    vals, kind, major = _oplus_mu_arrays(A.elements, B.elements, A.U, cap)
    return MuCanonicalSet._build(vals, A.U, SumRecord(A, B, kind, major))


def _oplus_mu_arrays(a: np.ndarray, b: np.ndarray, U: int, cap: int | None):
    counters = stats.current()
    if counters is not None:
        counters.oplus_mu_calls += 1
    if cap is not None:
        a = a[: np.searchsorted(a, cap, side="right")]
        b = b[: np.searchsorted(b, cap, side="right")]
    sa = segments(a, U)
    sb = segments(b, U)
    vals = [a, b]
    kinds = [np.full(len(a), FROM_A, np.int8), np.full(len(b), FROM_B, np.int8)]
    majors = [sa, sb]
    if len(a) and len(b):
        if len(a) * len(b) <= PAIRWISE_LIMIT:
            k = np.maximum.outer(sa, sb)
            mask = ~(np.left_shift(np.int64(1), k) - 1)
            c = (a[:, None] & mask) + (b[None, :] & mask)
            vals.append(round_canonical_array(c.ravel(), U))
            kinds.append(np.where(sa[:, None] >= sb[None, :], A_MAJOR, B_MAJOR).astype(np.int8).ravel())
            majors.append(k.ravel())
        else:
            for k in range(int(max(sa[-1], sb[-1])) + 1):
                ccap = None if cap is None else cap >> k
                ak = a[sa == k]
                if len(ak):
                    partners = np.unique(b[sb <= k] >> k)
                    c = sumset_arrays(ak >> k, partners, ccap) << k
                    vals.append(round_canonical_array(c, U))
                    kinds.append(np.full(len(c), A_MAJOR, np.int8))
                    majors.append(np.full(len(c), k, np.int64))
                bk = b[sb == k]
                if len(bk) and k > 0:
                    partners = np.unique(a[sa < k] >> k)
                    if len(partners):
                        c = sumset_arrays(partners, bk >> k, ccap) << k
                        vals.append(round_canonical_array(c, U))
                        kinds.append(np.full(len(c), B_MAJOR, np.int8))
                        majors.append(np.full(len(c), k, np.int64))
    allv = np.concatenate(vals)
    allk = np.concatenate(kinds)
    allm = np.concatenate(majors)
    if cap is not None:
        keep = allv <= cap
        allv, allk, allm = allv[keep], allk[keep], allm[keep]
    out, first = np.unique(allv, return_index=True)
    return out, allk[first], allm[first].astype(np.int8)


def recover_pair(product: MuCanonicalSet, s: int) -> tuple[int, int]:
    """Find ``a ∈ A ∪ {0}``, ``b ∈ B ∪ {0}`` with ``(1 - 2/U)(a + b) <= s <= a + b``."""
    rec = product.record
    if rec is None:
        raise ValueError("set carries no ⊕_μ construction record")
    s = int(s)
    arr = product.elements
    i = int(np.searchsorted(arr, s))
    if i >= len(arr) or arr[i] != s:
        raise ValueError(f"{s} is not an element of the product")
    A, B, U = rec.left.elements, rec.right.elements, product.U
    if _member(A, s):
        return s, 0
    if _member(B, s):
        return 0, s
    kind = int(rec.kind[i])
    if kind in (A_MAJOR, B_MAJOR):
        cases = [(kind, int(rec.major[i]))]
    else:
        top = segment_of(s, U)
        cases = [(kd, k) for k in (top, top - 1) if k >= 0 for kd in (A_MAJOR, B_MAJOR)]
    for kind, k in cases:
        pair = _search_pair(A, B, U, s, kind, k)
        if pair is not None:
            a, b = pair
            assert s <= a + b and (U - 2) * (a + b) <= U * s
            return pair
    raise RuntimeError(f"no witness pair found for {s}")


def _member(arr: np.ndarray, x: int) -> bool:
    j = np.searchsorted(arr, x)
    return bool(j < len(arr) and arr[j] == x)


def _search_pair(A, B, U, s, kind, k):
    step = 1 << k
    targets = [s]
    if segment_of(s, U) == k + 1:
        targets.append(s + step)
    if kind == A_MAJOR:
        major, minor = A, B
        sm, sn = segments(A, U), segments(B, U)
        major, minor = major[sm == k], minor[sn <= k]
    else:
        sm, sn = segments(B, U), segments(A, U)
        major, minor = B[sm == k], A[sn < k]
    if len(major) == 0 or len(minor) == 0:
        return None
    for c in targets:
        need = c - major
        ok = (need >= 0) & (need % step == 0)
        if not ok.any():
            continue
        idx = np.searchsorted(minor, need)
        hit = ok & (idx < len(minor))
        hit[hit] &= minor[idx[hit]] < need[hit] + step
        if hit.any():
            j = int(np.argmax(hit))
            maj, mnr = int(major[j]), int(minor[idx[j]])
            return (maj, mnr) if kind == A_MAJOR else (mnr, maj)
    return None
