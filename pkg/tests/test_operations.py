import random

import pytest
from hypothesis import given, settings, strategies as st

from clonelab import _bits
from clonelab.operations import (
    BudgetError,
    KOperation,
    OpSet,
    adjoin_constants,
    all_relations,
    clo_generate,
    compose_ops,
    constant,
    identity,
    indicator,
    inv_bounded,
    is_clone_bounded,
    least_invariant_superset,
    max_op_arity,
    negation,
    pol_bounded,
    preserves,
    projection,
    spol_bounded,
)
from clonelab.relation import Relation, base_predicate, empty, full

from conftest import rel_of, relations

xor = rel_of([1, 1], lambda x, y: x ^ y)
x0 = rel_of([1], lambda x: x == 0)
AND = KOperation(1, 2, (0b1000,))
XOR = KOperation(1, 2, (0b0110,))


def ops(k, m, rng, count):
    return [KOperation.from_code(k, m, rng.getrandbits(k << m)) for _ in range(count)]


def test_operation_tables():
    assert negation().value(0, [0]) == 1
    assert AND.value(0, [1, 1]) == 1 and AND.value(0, [1, 0]) == 0
    assert projection(1, 2, 0).value(0, [1, 0]) == 1
    assert not constant(1, 2, 1).is_surjective and identity(2).is_surjective
    f = KOperation(2, 2, (0b0110, 0b0001))
    assert KOperation.from_code(2, 2, f.code) == f
    assert KOperation.from_encoding(2, 2, f.encoding()) == f
    with pytest.raises(ValueError):
        KOperation(1, 1, (0b100,))
    with pytest.raises(ValueError):
        KOperation(2, 1, (0,))


def test_compose_examples():
    assert compose_ops(negation(), [negation()]) == identity(1)
    p = [projection(1, 3, i) for i in range(2)]
    assert compose_ops(XOR, p) == KOperation(1, 3, (0b00111100,))
    f = KOperation(2, 2, (0b0110, 0b0100))  # (xor, x and not y)
    swapped = compose_ops(f, [projection(2, 2, 1), projection(2, 2, 0)])
    assert swapped == KOperation(2, 2, (0b0110, 0b0010))
    with pytest.raises(ValueError):
        compose_ops(XOR, [identity(1)])


def test_clo_generate_examples():
    assert len(clo_generate([], 2, k=1)) == 3
    assert set(clo_generate([negation()], 1)) == {identity(1), negation()}
    o_id = KOperation(2, 1, (0b00, 0b10))
    unary = set(clo_generate([o_id], 1).of_arity(1))
    assert unary == {identity(2), o_id}
    with pytest.raises(ValueError):
        clo_generate([], 2)


def test_preserves_examples():
    assert preserves(negation(), xor)
    assert not preserves(AND, xor)
    assert preserves(AND, full(1, [1, 1]))
    assert preserves(AND, empty(1, [1, 1]))
    with pytest.raises(ValueError):
        preserves(identity(2), xor)


def test_pol_examples():
    assert set(spol_bounded([xor], 1)) == {identity(1), negation()}
    assert set(pol_bounded([x0], 1)) == {identity(1), constant(1, 1, 0)}
    everything = pol_bounded([base_predicate("equality", 1, 1)], 2)
    assert len(everything.of_arity(1)) == 4 and len(everything.of_arity(2)) == 16


def test_inv_examples():
    neg = OpSet.from_ops(1, [negation()])
    unary = {r.bits for r in inv_bounded(neg, 1) if r.arity == 1}
    assert unary == {0b00, 0b11}
    assert len(inv_bounded(OpSet(1), 1)) == len(list(all_relations(1, 1)))
    zero = OpSet.from_ops(1, [constant(1, 1, 0)])
    unary = {r.bits for r in inv_bounded(zero, 1) if r.arity == 1}
    assert unary == {0b00, 0b01, 0b11}  # empty, {0}, full


def test_indicator_examples():
    assert set(indicator(clo_generate([], 1, k=1), 1)) == {(0, 1)}
    all_unary = OpSet.from_ops(1, [KOperation(1, 1, (t,)) for t in range(4)])
    assert len(set(indicator(all_unary, 1))) == 4
    assert indicator(clo_generate([negation()], 1), 1) == xor


def test_least_invariant_superset_examples():
    rho = rel_of([1, 1], lambda x, y: (x, y) == (0, 1))
    F = clo_generate([negation()], 2)
    assert least_invariant_superset(rho, F) == xor
    assert least_invariant_superset(rho, clo_generate([], 2, k=1)) == rho
    assert least_invariant_superset(empty(1, [1]), F) == empty(1, [1])


def test_adjoin_constants_examples():
    eq = base_predicate("equality", 1, 1)
    assert adjoin_constants([xor], {0}) == []
    assert adjoin_constants([eq], {0, 1}) == [eq]
    assert adjoin_constants([x0], {0}) == [x0]
    with pytest.raises(ValueError):
        adjoin_constants([eq], {2})


def test_budget():
    assert max_op_arity(1) == 4 and max_op_arity(2) == 3
    with pytest.raises(BudgetError):
        pol_bounded([full(3, [1])], 3)


@settings(max_examples=40, deadline=None)
@given(relations(k=1, max_arity=3, min_arity=1), st.integers(0, 2**32))
def test_pol_mask_matches_preserves(rel, seed):
    rng = random.Random(seed)
    for m in (1, 2):
        pol = pol_bounded([rel], m)
        for f in ops(1, m, rng, 8):
            assert (f in pol) == preserves(f, rel)


@settings(max_examples=40, deadline=None)
@given(relations(max_arity=3, min_arity=1), st.integers(0, 2**32))
def test_preservation_compositional(rel, seed):
    rng = random.Random(seed)
    pol = list(pol_bounded([rel], 2))
    if not pol:
        return
    for _ in range(5):
        f = rng.choice(pol)
        inner = [g for g in pol if g.arity == 2] or [projection(rel.k, 2, 0)]
        gs = [rng.choice(inner) for _ in range(f.arity)]
        assert preserves(compose_ops(f, gs), rel)


@settings(max_examples=25, deadline=None)
@given(st.lists(relations(k=1, max_arity=2), min_size=1, max_size=3))
def test_extensive_and_antitone(S):
    F = pol_bounded(S, 2, k=1)
    invs = {(r.sorts, r.bits) for r in inv_bounded(F, 2)}
    assert all((r.sorts, r.bits) in invs for r in S)
    smaller = OpSet(1, {1: F.masks[1]})
    assert invs <= {(r.sorts, r.bits) for r in inv_bounded(smaller, 2)}


@pytest.mark.parametrize("seed", range(6))
def test_indicator_invariant_under_generators(seed):
    rng = random.Random(seed)
    G = ops(1, 2, rng, 2)
    F = clo_generate(G, 2)
    assert is_clone_bounded(F, 2)
    ind = indicator(F, 2)
    assert all(preserves(g, ind) for g in G)


@pytest.mark.parametrize("seed", range(6))
def test_row_selection_reproduces_invariants(seed):
    # a relation invariant under Pol S is the set of columns f(rows) over the
    # |rho|-ary polymorphisms, read off the indicator relation
    rng = random.Random(seed)
    S = [Relation(1, (1, 1), rng.randrange(16)) for _ in range(2)]
    for rho in inv_bounded(pol_bounded(S, 3, k=1), 2):
        tuples = list(rho)
        m = len(tuples)
        if not 1 <= m <= 3:
            continue
        ind = indicator(pol_bounded(S, m, k=1), m)
        rows = [_bits.index_of(col) for col in zip(*tuples)]
        got = {tuple(code[r] for r in rows) for code in ind}
        assert got == set(tuples)
