from itertools import product

import pytest
from hypothesis import assume, given

from clonelab.elementary import (
    compose_bits,
    compose_form,
    eo_compose,
    eo_conjoin,
    eo_dummy,
    eo_exists,
    eo_forall,
    eo_identify,
    essential,
    forall_form,
)
from clonelab.gf2 import materialize, to_disjunctive_form
from clonelab.relation import base_predicate, full

from conftest import rel_of, relations


def test_dummy_errors(xor):
    with pytest.raises(ValueError):
        eo_dummy(xor, remove=0)
    with pytest.raises(ValueError):
        eo_dummy(xor, append=2)
    with pytest.raises(ValueError):
        eo_dummy(xor)
    grown = eo_dummy(xor, append=1)
    assert grown.sorts == (1, 1, 1) and essential(grown) == [0, 1]
    assert eo_dummy(grown, remove=2) == xor


def test_identify_equality():
    assert eo_identify(base_predicate("equality", 1, 1)) == full(1, [1])
    with pytest.raises(ValueError):
        eo_identify(rel_of([1, 2], lambda x, y: x == y))


def test_compose_affine(xor):
    a = rel_of([1, 1], lambda z, x: z ^ x == 1)
    b = rel_of([1, 1], lambda z, y: z ^ y == 0)
    assert eo_compose(a, b) == xor


def test_compose_opposite_clauses():
    # z=0 and z=1 join to the unsatisfiable 0=1; the other clauses survive
    a = rel_of([1, 1], lambda z, x: z == 0 or x == 1)
    b = rel_of([1, 1], lambda z, y: z == 1 or y == 1)
    out = eo_compose(a, b)
    assert out == rel_of([1, 1], lambda x, y: x == 1 or y == 1)
    assert materialize(compose_form(to_disjunctive_form(a), to_disjunctive_form(b))) == out


@given(relations(k=1, max_arity=3, min_arity=1))
def test_compose_with_equality_is_neutral(rel):
    assume(0 in essential(rel))
    assert eo_compose(base_predicate("equality", 1, 1), rel) == rel


def test_compose_on_dummy_rejected(xor):
    with pytest.raises(ValueError):
        eo_compose(rel_of([1, 1], lambda z, x: x == 0), xor)
    with pytest.raises(ValueError):
        eo_compose(xor, rel_of([2, 1], lambda z, y: z == y, k=2))


def test_forall_and_conjoin():
    rel = rel_of([1, 1], lambda y, x: y == x or x == 0)
    assert eo_forall(rel) == rel_of([1], lambda x: x == 0)
    a = rel_of([1, 1], lambda x, y: x == 0 or y == 1)
    b = rel_of([1, 1], lambda x, y: y == 0 or x == 1)
    assert eo_conjoin(a, b) == base_predicate("equality", 1, 1)
    with pytest.raises(ValueError):
        eo_conjoin(a, rel_of([1], lambda x: x))


def test_exists_on_empty_arity_one():
    assert eo_exists(rel_of([1], lambda x: False)).bits == 0


keys = relations(k=1, max_arity=3, min_arity=1).filter(lambda r: to_disjunctive_form(r) is not None)


@given(keys)
def test_forall_form_matches(rel):
    assert materialize(forall_form(to_disjunctive_form(rel))) == eo_forall(rel)


@given(keys, keys)
def test_compose_form_matches(a, b):
    assume(0 in essential(a) and 0 in essential(b))
    df = compose_form(to_disjunctive_form(a), to_disjunctive_form(b))
    assert materialize(df) == eo_compose(a, b)


@given(relations(k=1, max_arity=3, min_arity=1), relations(k=1, max_arity=3, min_arity=1))
def test_compose_is_exists_of_join(a, b):
    n, m = a.arity - 1, b.arity - 1
    sa, sb = set(a), set(b)
    want = {
        x + y
        for x in product((0, 1), repeat=n)
        for y in product((0, 1), repeat=m)
        if any((z,) + x in sa and (z,) + y in sb for z in (0, 1))
    }
    assert set(compose_bits(a, b)) == want


def test_identify_in_parity():
    # x+y=u+v with u, v moved to the front and identified leaves x+y=0
    rel = rel_of([1, 1, 1, 1], lambda u, v, x, y: x ^ y == u ^ v)
    assert eo_identify(rel) == rel_of([1, 1, 1], lambda u, x, y: x == y)
    assert eo_forall(eo_identify(rel)) == base_predicate("equality", 1, 1)
