from itertools import product

import pytest
from hypothesis import strategies as st

from clonelab.relation import Relation, make_relation


def rel_of(sorts, pred, k=None):
    sorts = tuple(sorts)
    k = k or max(sorts, default=1)
    return make_relation(k, sorts, [t for t in product((0, 1), repeat=len(sorts)) if pred(*t)])


@st.composite
def relations(draw, k=None, max_arity=3, min_arity=0):
    k = k or draw(st.integers(1, 2))
    n = draw(st.integers(min_arity, max_arity))
    sorts = tuple(draw(st.lists(st.integers(1, k), min_size=n, max_size=n)))
    bits = draw(st.integers(0, (1 << (1 << n)) - 1))
    return Relation(k, sorts, bits)


@pytest.fixture
def xor():
    return rel_of([1, 1], lambda x, y: x ^ y == 1)


@pytest.fixture
def impl():
    return rel_of([1, 1], lambda x, y: x == 0 or y == 1)
