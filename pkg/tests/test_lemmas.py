"""Property tests for the approximation lemmas (check_approx is the judge)."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lemma_cases import CASES

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("name", sorted(CASES))
@given(seed=seeds)
def test_lemma(name, seed):
    assert CASES[name](seed)
