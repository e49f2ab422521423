from itertools import product

import pytest
from hypothesis import given, strategies as st

from clonelab.gf2 import (
    DisjunctiveForm,
    LinearEquation,
    canonicalize,
    format_equation,
    gauss_rearrangement,
    is_key,
    materialize,
    rearrangement_round_trip,
    rref,
    to_disjunctive_form,
)
from clonelab.relation import Relation, empty, full

from conftest import rel_of, relations


def eq(coeffs, rhs):
    return LinearEquation.from_coeffs(coeffs, rhs)


def key_oracle(rel):
    """Union of all equations whose solution sets lie inside rel."""
    n = rel.arity
    covered = 0
    for coeffs in product((0, 1), repeat=n):
        for rhs in (0, 1):
            sol = eq(coeffs, rhs).solutions()
            if sol & ~rel.bits == 0:
                covered |= sol
    return covered == rel.bits


def test_rref_example():
    system = rref([eq((1, 1), 1), eq((0, 1), 1)])
    assert [format_equation(r) for r in system.rows] == ["x1=0", "x2=1"]


def test_rref_inconsistent():
    system = rref([eq((1, 0), 0), eq((1, 0), 1)])
    assert system.inconsistent and system.solutions() == 0
    with pytest.raises(ValueError):
        rref([])
    with pytest.raises(ValueError):
        rref([eq((1,), 0), eq((1, 1), 0)])


def test_equation_basics():
    e = eq((0, 1, 1), 1)
    assert e.support == [1, 2] and e.pivot == 1
    assert e.holds((0, 1, 0)) and not e.holds((1, 1, 1))
    assert eq((0, 0), 1).solutions() == 0
    assert eq((0, 0), 0).pivot is None
    with pytest.raises(ValueError):
        LinearEquation(2, 0b100, 0)
    with pytest.raises(ValueError):
        LinearEquation(2, 1, 2)


def test_is_key_examples():
    assert is_key(Relation(1, (1, 1), 0))  # no clauses at all
    assert not is_key(rel_of([1, 1], lambda x, y: (x, y) == (1, 1)))
    assert is_key(rel_of([1, 1], lambda x, y: x == 0 or y == 1))
    assert is_key(full(1, [1, 1]))


def test_disjunctive_form_example():
    df = to_disjunctive_form(rel_of([1, 1], lambda x, y: (x, y) != (1, 0)))
    assert [format_equation(c) for c in df.clauses] == ["x1=0", "x2=1"]
    assert to_disjunctive_form(rel_of([1, 1], lambda x, y: x & y)) is None


def test_empty_form_is_false():
    df = DisjunctiveForm(1, (1, 1), ())
    assert materialize(df) == empty(1, [1, 1])
    assert str(df) == "false"
    with pytest.raises(ValueError):
        DisjunctiveForm(1, (2,), ())
    with pytest.raises(ValueError):
        DisjunctiveForm(1, (1,), (eq((1, 1), 0),))


def test_gauss_rejects_full_and_nonkey():
    with pytest.raises(ValueError):
        gauss_rearrangement(full(1, [1]))
    with pytest.raises(ValueError):
        gauss_rearrangement(rel_of([1, 1], lambda x, y: x & y))


def test_gauss_blocks():
    rel = rel_of([1, 2, 1], lambda x, y, z: x ^ y == 1 or z == 0)
    g = gauss_rearrangement(rel)
    assert len(g.x_sorts) == 1 and len(g.z_sorts) == 1
    assert rearrangement_round_trip(rel)


def test_is_key_exhaustive_arity3():
    for bits in range(256):
        rel = Relation(1, (1, 1, 1), bits)
        assert is_key(rel) == key_oracle(rel)


@given(relations(max_arity=4))
def test_is_key_matches_oracle(rel):
    assert is_key(rel) == key_oracle(rel)


@given(relations(max_arity=4))
def test_form_round_trip(rel):
    df = to_disjunctive_form(rel)
    if df is None:
        return
    assert materialize(df) == rel
    assert canonicalize(df) == df
    pivots = [c.pivot for c in df.clauses if c.mask]
    assert pivots == sorted(set(pivots))
    if not rel.is_full:
        assert rearrangement_round_trip(rel)


@given(st.integers(1, 4).flatmap(lambda n: st.lists(
    st.tuples(st.integers(0, (1 << n) - 1), st.integers(0, 1)), min_size=1, max_size=4
).map(lambda rows: (n, rows))))
def test_disjunction_of_equations_is_key(case):
    n, rows = case
    df = DisjunctiveForm(1, (1,) * n, tuple(LinearEquation(n, m, r) for m, r in rows))
    assert is_key(materialize(df))


def test_rref_degenerate():
    assert rref([eq((0, 0), 1)]).inconsistent
    rows = rref([eq((1, 1), 0), eq((1, 1), 0)]).rows
    assert [format_equation(r) for r in rows] == ["x1+x2=0"]


def test_xor_form_and_trivial_materialize(xor):
    assert [format_equation(c) for c in to_disjunctive_form(xor).clauses] == ["x1+x2=1"]
    assert materialize(DisjunctiveForm(1, (1,), (eq((0,), 0),))) == full(1, [1])
