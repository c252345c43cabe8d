"""Shared hypothesis strategies."""

import numpy as np
from hypothesis import strategies as st

from partition_fptas.canonical import MuCanonicalSet, round_canonical_array

small_sets = st.lists(st.integers(0, 500), max_size=64)
positive_sets = st.lists(st.integers(1, 10**6), min_size=1, max_size=80)
precisions = st.sampled_from([2, 4, 8, 16, 64])


@st.composite
def canonical_sets(draw, U=None, max_size=60, hi=4000, low=1):
    U = draw(precisions) if U is None else U
    raw = draw(st.lists(st.integers(low, hi), min_size=1, max_size=max_size))
    arr = np.unique(round_canonical_array(np.array(raw, dtype=np.int64), U))
    return MuCanonicalSet(arr, U)


@st.composite
def canonical_pairs(draw, max_size=60):
    U = draw(precisions)
    return draw(canonical_sets(U, max_size)), draw(canonical_sets(U, max_size))
