import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from partition_fptas import stats
from partition_fptas.intset import (
    INT64_MAX,
    PAIRWISE_LIMIT,
    IntegerSet,
    make_set,
    oplus,
    restrict,
    scale_floor,
    sumset,
    sumset_arrays,
)
from strategies import small_sets

nonempty = st.lists(st.integers(0, 500), min_size=1, max_size=64)


def S(*xs):
    return IntegerSet(xs)


class TestMakeSet:
    def test_sort_dedup(self):
        assert make_set([3, 1, 3]).tolist() == [1, 3]

    def test_empty(self):
        assert make_set([]).tolist() == []

    def test_zero_kept(self):
        assert make_set([0, 7]).tolist() == [0, 7]

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            make_set([1, -2])

    def test_rejects_too_large(self):
        with pytest.raises(OverflowError):
            make_set([INT64_MAX + 1])

    def test_numpy_input(self):
        assert make_set(np.array([5, 2, 5], dtype=np.uint32)).tolist() == [2, 5]

    def test_immutable(self):
        s = make_set([1, 2])
        with pytest.raises(ValueError):
            s.elements[0] = 9

    def test_accessors(self):
        s = make_set([4, 1, 9])
        assert (s.min(), s.max(), s.total(), len(s)) == (1, 9, 14, 3)
        assert 4 in s and 5 not in s
        assert s == make_set([9, 4, 1]) and hash(s) == hash(make_set([1, 4, 9]))


class TestRestrict:
    def test_examples(self):
        s = S(1, 5, 9)
        assert restrict(s, 2, 8).tolist() == [5]
        assert restrict(s, 0, 100).tolist() == [1, 5, 9]
        assert restrict(s, 6, 8).tolist() == []

    def test_closed_interval(self):
        assert restrict(S(1, 5, 9), 5, 9).tolist() == [5, 9]

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            restrict(S(1), 3, 2)


class TestScaleFloor:
    def test_examples(self):
        assert scale_floor(S(10, 25), 10, 1).tolist() == [1, 2]
        assert scale_floor(S(4, 8), 1, 1).tolist() == [4, 8]
        assert scale_floor(S(7), 2, 3).tolist() == [10]

    def test_big_values_exact(self):
        x = 2**62 + 1
        # x * 3 overflows int64 but the result fits
        assert scale_floor(S(x), 7, 3).tolist() == [x * 3 // 7]
        with pytest.raises(OverflowError):
            scale_floor(S(x), 1, 7)

    def test_python_int_path(self):
        x = 2**40 + 3
        assert scale_floor(S(x), 2**20, 2**21).tolist() == [x * 2**21 // 2**20]

    @given(small_sets, st.integers(1, 50))
    def test_round_trip_boundary(self, xs, a):
        s = make_set(xs)
        back = scale_floor(scale_floor(s, a, 1), 1, a)
        for x in s:
            assert x - a < a * (x // a) <= x
            assert a * (x // a) in back


class TestSumset:
    def test_examples(self):
        assert sumset(S(1, 2), S(10)).tolist() == [11, 12]
        assert sumset(S(0), S(5, 7)).tolist() == [5, 7]
        assert sumset(S(1, 3), S(1, 3), cap=4).tolist() == [2, 4]

    def test_infinite_cap(self):
        assert sumset(S(1), S(2), cap=float("inf")).tolist() == [3]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sumset(S(), S(1))

    def test_overflow_detected(self):
        with pytest.raises(OverflowError):
            sumset(S(INT64_MAX - 1), S(5))

    @given(nonempty, nonempty)
    def test_matches_brute_force(self, a, b):
        expect = sorted({x + y for x in a for y in b})
        assert sumset(make_set(a), make_set(b)).tolist() == expect

    @given(nonempty, nonempty, st.integers(0, 1000))
    def test_capped_brute_force(self, a, b, cap):
        expect = sorted({x + y for x in a for y in b if x + y <= cap})
        assert sumset(make_set(a), make_set(b), cap).tolist() == expect

    @given(nonempty, nonempty)
    def test_basic_laws(self, a, b):
        A, B = make_set(a), make_set(b)
        s = sumset(A, B)
        assert len(s) <= len(A) * len(B)
        assert s.min() == A.min() + B.min()
        assert s.max() == A.max() + B.max()
        assert s == sumset(B, A)

    @given(nonempty, nonempty, nonempty)
    def test_associative(self, a, b, c):
        A, B, C = map(make_set, (a, b, c))
        assert sumset(sumset(A, B), C) == sumset(A, sumset(B, C))

    def test_dense_engine_matches_pairwise(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = np.unique(rng.integers(0, 3000, 300))
            b = np.unique(rng.integers(0, 3000, 300))
            assert len(a) * len(b) > PAIRWISE_LIMIT
            with stats.collecting() as ct:
                got = sumset_arrays(a, b)
            assert ct.fft_sumsets == 1
            assert np.array_equal(got, np.unique(np.add.outer(a, b)))

    def test_dense_engine_with_cap(self):
        rng = np.random.default_rng(4)
        a = np.unique(rng.integers(0, 5000, 400))
        b = np.unique(rng.integers(0, 5000, 400))
        got = sumset_arrays(a, b, 4000)
        s = np.unique(np.add.outer(a, b))
        assert np.array_equal(got, s[s <= 4000])

    def test_sparse_wide_operands_use_pairwise(self):
        a = np.array([0, 10**12], dtype=np.int64)
        b = np.arange(0, 4000 * 10**6, 10**6, dtype=np.int64)
        with stats.collecting() as ct:
            got = sumset_arrays(a, b)
        assert ct.pairwise_sumsets == 1 and len(got) == 8000


class TestOplus:
    def test_examples(self):
        assert oplus(S(4), S(5)).tolist() == [4, 5, 9]
        assert oplus(S(2), S(2)).tolist() == [2, 4]
        assert oplus(S(1), S(2, 3), cap=3).tolist() == [1, 2, 3]

    @given(nonempty, nonempty)
    def test_definition(self, a, b):
        expect = sorted(set(a) | set(b) | {x + y for x in a for y in b})
        assert oplus(make_set(a), make_set(b)).tolist() == expect
