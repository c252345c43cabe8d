from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from partition_fptas.canonical import (
    MuCanonicalSet,
    oplus_mu,
    recover_pair,
    round_to_canonical,
    segment_of,
    segments,
    validate,
    validate_complete,
)
from partition_fptas.intset import IntegerSet, oplus
from partition_fptas.oracle import ApproxSpec, check_approx
from strategies import canonical_pairs, positive_sets, precisions


def M(xs, U):
    return MuCanonicalSet(xs, U)


class TestSegments:
    def test_boundaries(self):
        U = 4
        assert [segment_of(x, U) for x in (0, 7, 8, 15, 16, 31, 32)] == [0, 0, 1, 1, 2, 2, 3]

    def test_vectorised_matches_scalar_near_float_limits(self):
        U = 3
        xs = np.array([2**53 - 1, 2**53, 2**53 + 1, 2**62 - 1, 2**61, 6 * 2**50 - 1], dtype=np.int64)
        assert segments(xs, U).tolist() == [segment_of(int(x), U) for x in xs]

    @given(st.lists(st.integers(0, 2**62), min_size=1, max_size=50), st.integers(2, 1000))
    def test_vectorised_matches_scalar(self, xs, U):
        arr = np.array(xs, dtype=np.int64)
        assert segments(arr, U).tolist() == [segment_of(x, U) for x in xs]


class TestRoundToCanonical:
    def test_examples(self):
        assert round_to_canonical([5, 9, 17], 4).tolist() == [5, 8, 16]
        assert round_to_canonical([1, 2, 3], 4).tolist() == [1, 2, 3]

    def test_hundred_rounds_to_96(self):
        # 100 and 101 lie in [64, 128), segment 4, so both go to a multiple of 16
        r = round_to_canonical([100, 101], 4)
        assert r.tolist() == [96]
        assert check_approx(r, IntegerSet([100, 101]), ApproxSpec.factor(Fraction(1, 4)))[0]

    def test_rejects_empty_and_nonpositive(self):
        with pytest.raises(ValueError):
            round_to_canonical([], 4)
        with pytest.raises(ValueError):
            round_to_canonical([0, 5], 4)

    def test_rejects_bad_precision(self):
        with pytest.raises(ValueError):
            round_to_canonical([5], 1)

    @given(positive_sets, precisions)
    def test_factor_approximation(self, xs, U):
        r = round_to_canonical(xs, U)
        assert validate(r)
        ok, bad = check_approx(r, IntegerSet(xs), ApproxSpec.factor(Fraction(1, U)))
        assert ok, bad

    @given(positive_sets, precisions)
    def test_small_elements_unchanged(self, xs, U):
        r = set(round_to_canonical(xs, U).tolist())
        assert {x for x in xs if x < 2 * U} <= r


class TestValidate:
    def test_examples(self):
        assert validate([4, 5, 8, 10], 4)
        assert not validate([4, 9], 4)
        assert validate_complete([4, 8, 16], 4)
        assert not validate_complete([4, 16], 4)

    def test_needs_precision_for_plain_sets(self):
        with pytest.raises(TypeError):
            validate([4])

    def test_constructor_checks(self):
        with pytest.raises(ValueError):
            M([4, 9], 4)
        s = M([4, 8, 16], 4)
        assert s.complete and s.top_level == 2

    def test_empty_and_low_sets_are_complete(self):
        assert validate_complete([], 4)
        assert validate_complete([1, 7], 4)


class TestSizeBound:
    """Counting bound for μ-canonical sets.

    Segment i >= 1 holds at most U multiples of 2^i and [0, U) at most U
    integers, so |S ∩ [U, ∞)| <= (h+1) U where h is the top level.
    """

    @given(positive_sets, precisions)
    def test_rounded_sets(self, xs, U):
        s = round_to_canonical(xs, U)
        a = s.elements
        h = s.top_level
        assert int((a >= U).sum()) <= (h + 1) * U
        assert int((a < U).sum()) <= U

    def test_tight_at_full_segments(self):
        U = 8
        full = list(range(U, 2 * U)) + list(range(2 * U, 4 * U, 2)) + list(range(4 * U, 8 * U, 4))
        s = M(full, U)
        assert len(s) == (s.top_level + 1) * U


class TestOplusMu:
    def test_examples(self):
        assert oplus_mu(M([4], 4), M([4], 4)).tolist() == [4, 8]
        assert oplus_mu(M([4, 10], 4), M([5], 4)).tolist() == [4, 5, 8, 10, 14]
        got = oplus_mu(M([4, 5], 4), M([4, 5], 4))
        assert {4, 5, 8, 10} <= set(got.tolist())
        exact = oplus(IntegerSet([4, 5]), IntegerSet([4, 5]))
        assert check_approx(got, exact, ApproxSpec.factor(Fraction(1, 2)))[0]

    def test_precision_mismatch(self):
        with pytest.raises(ValueError):
            oplus_mu(M([4], 4), M([4], 8))

    def test_cap(self):
        full = oplus_mu(M([4, 10], 4), M([5], 4))
        capped = oplus_mu(M([4, 10], 4), M([5], 4), cap=9)
        assert capped.tolist() == [x for x in full.tolist() if x <= 9]

    @given(canonical_pairs())
    def test_contract(self, pair):
        A, B = pair
        U = A.U
        C = oplus_mu(A, B)
        assert validate(C)
        assert set(A.tolist()) | set(B.tolist()) <= set(C.tolist())
        exact = oplus(A.base, B.base)
        ok, bad = check_approx(C, exact, ApproxSpec.factor(Fraction(2, U)))
        assert ok, bad
        if A.complete and B.complete:
            assert C.complete

    @given(canonical_pairs(max_size=200))
    def test_large_operands_take_grouped_path(self, pair):
        A, B = pair
        C = oplus_mu(A, B)
        ok, bad = check_approx(C, oplus(A.base, B.base), ApproxSpec.factor(Fraction(2, A.U)))
        assert ok, bad

    def test_grouped_path_matches_pairwise(self):
        # the grouped (per segment) computation must give the same set as
        # the elementwise formula it replaces
        rng = np.random.default_rng(11)
        for U in (2, 4, 16, 64):
            for _ in range(10):
                a = round_to_canonical(rng.integers(1, 20000, 150), U)
                b = round_to_canonical(rng.integers(1, 20000, 150), U)
                got = oplus_mu(a, b).tolist()
                expect = set(a.tolist()) | set(b.tolist())
                for x in a.tolist():
                    for y in b.tolist():
                        k = max(segment_of(x, U), segment_of(y, U))
                        c = ((x >> k) + (y >> k)) << k
                        expect.add(c >> segment_of(c, U) << segment_of(c, U))
                assert got == sorted(expect)


class TestRecoverPair:
    def test_examples(self):
        P = oplus_mu(M([4, 10], 4), M([5], 4))
        assert recover_pair(P, 8) == (4, 5)
        assert recover_pair(P, 4) == (4, 0)
        assert recover_pair(P, 14) == (10, 5)
        assert recover_pair(P, 5) == (0, 5)

    def test_errors(self):
        P = oplus_mu(M([4, 10], 4), M([5], 4))
        with pytest.raises(ValueError):
            recover_pair(P, 9)
        with pytest.raises(ValueError):
            recover_pair(M([4], 4), 4)

    @given(canonical_pairs())
    def test_round_trip(self, pair):
        A, B = pair
        U = A.U
        P = oplus_mu(A, B)
        a_set, b_set = set(A.tolist()) | {0}, set(B.tolist()) | {0}
        for s in P.tolist():
            a, b = recover_pair(P, s)
            assert a in a_set and b in b_set
            assert (U - 2) * (a + b) <= U * s <= U * (a + b)

    def test_without_hints(self):
        # drop the stored hints; the case search must still find a witness
        rng = np.random.default_rng(5)
        U = 16
        A = round_to_canonical(rng.integers(1, 3000, 80), U)
        B = round_to_canonical(rng.integers(1, 3000, 80), U)
        P = oplus_mu(A, B)
        rec = P.record
        object.__setattr__(rec, "kind", np.full(len(P), -1, dtype=np.int8))
        for s in P.tolist():
            a, b = recover_pair(P, s)
            assert (U - 2) * (a + b) <= U * s <= U * (a + b)
