"""Exact integer-set primitives.

An :class:`IntegerSet` is an immutable, strictly increasing array of
non-negative 64-bit integers.  Sumsets go through a single engine that
picks between pairwise enumeration and a dense FFT convolution over the
value window, whichever is cheaper for the operands at hand.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy import fft as sfft

from . import stats

INT64_MAX = np.iinfo(np.int64).max

#: Pairwise products at or below this size always use sort-merge enumeration.
PAIRWISE_LIMIT = 4096
#: Rows of the outer product materialised at once by the pairwise engine.
_PAIRWISE_CHUNK = 1 << 22

_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.setflags(write=False)


class IntegerSet:
    """Sorted set of distinct non-negative integers."""

    __slots__ = ("_a",)

    def __init__(self, values: Iterable[int] = ()):
        self._a = _canonical_array(values)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "IntegerSet":
        # arr must already be sorted, unique, non-negative int64
        obj = cls.__new__(cls)
        if arr.flags.writeable:
            arr.setflags(write=False)
        obj._a = arr
        return obj

    @property
    def elements(self) -> np.ndarray:
        return self._a

    def __len__(self) -> int:
        return len(self._a)

    def __iter__(self):
        return (int(x) for x in self._a)

    def __contains__(self, x) -> bool:
        a = self._a
        i = np.searchsorted(a, x)
        return bool(i < len(a) and a[i] == x)

    def __eq__(self, other) -> bool:
        if isinstance(other, IntegerSet):
            return np.array_equal(self._a, other._a)
        return NotImplemented

    def __hash__(self):
        return hash(self._a.tobytes())

    def __repr__(self) -> str:
        if len(self._a) > 12:
            head = ", ".join(str(int(x)) for x in self._a[:6])
            return f"IntegerSet({{{head}, ...}} |{len(self._a)}|)"
        return "IntegerSet({" + ", ".join(str(int(x)) for x in self._a) + "})"

    def tolist(self) -> list[int]:
        return [int(x) for x in self._a]

    def min(self) -> int:
        return int(self._a[0])

    def max(self) -> int:
        return int(self._a[-1])

    def total(self) -> int:
        return sum(int(x) for x in self._a)

    def union(self, other: "IntegerSet") -> "IntegerSet":
        return IntegerSet._wrap(np.union1d(self._a, other._a))


def _canonical_array(values) -> np.ndarray:
    if isinstance(values, IntegerSet):
        return values.elements
    if isinstance(values, np.ndarray):
        arr = values
    else:
        values = list(values)
        if not values:
            return _EMPTY
        lo, hi = min(values), max(values)
        if lo < 0:
            raise ValueError(f"negative value {lo} in integer set")
        if hi > INT64_MAX:
            raise OverflowError(f"value {hi} exceeds 64-bit range")
        arr = np.asarray(values, dtype=np.int64)
    if arr.size == 0:
        return _EMPTY
    if arr.dtype.kind not in "iu":
        raise TypeError("integer set needs integer values")
    if arr.dtype.kind == "u" and arr.max() > INT64_MAX:
        raise OverflowError("value exceeds 64-bit range")
    arr = np.unique(arr.astype(np.int64, copy=False))
    if arr[0] < 0:
        raise ValueError(f"negative value {int(arr[0])} in integer set")
    arr.setflags(write=False)
    return arr


def make_set(values: Iterable[int]) -> IntegerSet:
    """Sort and deduplicate ``values``; negative entries are rejected."""
    return IntegerSet(values)


def restrict(s: IntegerSet, w: int, v: int) -> IntegerSet:
    """Elements of ``s`` inside the closed interval ``[w, v]``."""
    if w > v:
        raise ValueError("restrict needs w <= v")
    a = s.elements
    lo = np.searchsorted(a, w, side="left") if w > 0 else 0
    hi = np.searchsorted(a, v, side="right") if v < INT64_MAX else len(a)
    return IntegerSet._wrap(a[lo:hi])


def scale_floor(s: IntegerSet, num: int, den: int) -> IntegerSet:
    """Map every ``x`` to ``floor(x * den / num)`` and deduplicate."""
    if num < 1 or den < 1:
        raise ValueError("scale_floor needs num >= 1 and den >= 1")
    a = s.elements
    if len(a) == 0:
        return s
    if int(a[-1]) * den <= INT64_MAX:
        return IntegerSet._wrap(np.unique((a * den) // num))
    return IntegerSet(int(x) * den // num for x in a)


def _check_cap(cap):
    if cap is None:
        return None
    if cap == float("inf"):
        return None
    cap = int(cap)
    if cap < 0:
        raise ValueError("cap must be non-negative")
    return cap


def sumset_arrays(a: np.ndarray, b: np.ndarray, cap: int | None = None) -> np.ndarray:
    """Exact ``(a + b) ∩ [0, cap]`` for sorted unique int64 arrays."""
    if cap is not None:
        a = a[: np.searchsorted(a, cap, side="right")]
        b = b[: np.searchsorted(b, cap, side="right")]
    if len(a) == 0 or len(b) == 0:
        return _EMPTY
    lo = int(a[0]) + int(b[0])
    hi = int(a[-1]) + int(b[-1])
    if cap is not None:
        if lo > cap:
            return _EMPTY
        hi = min(hi, cap)
    elif hi > INT64_MAX:
        raise OverflowError("sumset exceeds 64-bit range")
    if len(a) < len(b):
        a, b = b, a
    pairs = len(a) * len(b)
    width = hi - lo + 1
    counters = stats.current()
    if pairs <= PAIRWISE_LIMIT or pairs <= 2 * width:
        if counters is not None:
            counters.pairwise_sumsets += 1
        return _pairwise(a, b, cap)
    if counters is not None:
        counters.fft_sumsets += 1
        counters.fft_points += width
    return _dense(a, b, lo, hi)


def _pairwise(a, b, cap):
    rows = max(1, _PAIRWISE_CHUNK // len(b))
    parts = []
    for start in range(0, len(a), rows):
        s = np.add.outer(a[start : start + rows], b).ravel()
        if cap is not None:
            s = s[s <= cap]
        parts.append(np.unique(s))
    if len(parts) == 1:
        return parts[0]
    return np.unique(np.concatenate(parts))


def _dense(a, b, lo, hi):
    a0, b0 = int(a[0]), int(b[0])
    la = min(int(a[-1]), hi - b0) - a0 + 1
    lb = min(int(b[-1]), hi - a0) - b0 + 1
    fa = np.zeros(la, dtype=np.float64)
    fb = np.zeros(lb, dtype=np.float64)
    fa[a[a - a0 < la] - a0] = 1.0
    fb[b[b - b0 < lb] - b0] = 1.0
    n = la + lb - 1
    nfft = sfft.next_fast_len(n, real=True)
    conv = sfft.irfft(sfft.rfft(fa, nfft) * sfft.rfft(fb, nfft), nfft)[: hi - lo + 1]
    return np.flatnonzero(conv > 0.5).astype(np.int64) + lo


def sumset(a: IntegerSet, b: IntegerSet, cap=None) -> IntegerSet:
    """``(A + B)[0, cap]``; ``cap`` may be ``None`` or infinity for no cap."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("sumset operands must be non-empty")
    return IntegerSet._wrap(sumset_arrays(a.elements, b.elements, _check_cap(cap)))


def oplus(a: IntegerSet, b: IntegerSet, cap=None) -> IntegerSet:
    """``((A + B) ∪ A ∪ B)[0, cap]``."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("oplus operands must be non-empty")
    cap = _check_cap(cap)
    s = sumset_arrays(a.elements, b.elements, cap)
    out = np.union1d(np.union1d(a.elements, b.elements), s)
    if cap is not None:
        out = out[: np.searchsorted(out, cap, side="right")]
    return IntegerSet._wrap(out)
