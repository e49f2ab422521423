"""Elementary operations on relations.

Each operation acts on the leading variable(s) only; other positions are
reached by permuting first.  The ``*_form`` variants work on disjunctive forms
of key relations without materializing tuple sets.
"""
from . import _bits
from .gf2 import DisjunctiveForm, LinearEquation, canonicalize
from .relation import Relation, dummy_positions, permuted


def eo_dummy(rel, append=None, remove=None):
    """Append a dummy variable of sort ``append`` at the end, or remove the dummy at ``remove``."""
    if (append is None) == (remove is None):
        raise ValueError("give exactly one of append/remove")
    n = rel.arity
    if append is not None:
        if not 1 <= append <= rel.k:
            raise ValueError(f"sort {append} outside 1..{rel.k}")
        return Relation(rel.k, rel.sorts + (append,), _bits.insert_dummy(rel.bits, n, n))
    if not 0 <= remove < n:
        raise ValueError(f"no variable at position {remove}")
    if not _bits.is_dummy(rel.bits, n, remove):
        raise ValueError(f"variable {remove} is not dummy")
    sorts = rel.sorts[:remove] + rel.sorts[remove + 1:]
    return Relation(rel.k, sorts, _bits.cofactors(rel.bits, n, remove)[0])


def eo_permute(rel, perm):
    return permuted(rel, perm)


def eo_identify(rel):
    """rho'(x1, .., x_{n-1}) = rho(x1, x1, x2, ..)."""
    if rel.arity < 2:
        raise ValueError("identification needs two variables")
    if rel.sorts[0] != rel.sorts[1]:
        raise ValueError("the first two variables have different sorts")
    return Relation(rel.k, rel.sorts[1:], _bits.identify(rel.bits, rel.arity, 0, 1))


def _check_compose(a, b):
    if a.k != b.k:
        raise ValueError("relations over different k")
    if a.arity < 1 or b.arity < 1:
        raise ValueError("composition needs a leading variable on both sides")
    if a.sorts[0] != b.sorts[0]:
        raise ValueError("leading variables have different sorts")


def eo_compose(a, b):
    """exists z: a(z, x..) and b(z, y..); result variables are x.. then y.."""
    _check_compose(a, b)
    if _bits.is_dummy(a.bits, a.arity, 0) or _bits.is_dummy(b.bits, b.arity, 0):
        raise ValueError("composition on a dummy variable")
    return compose_bits(a, b)


def compose_bits(a, b):
    n, m = a.arity - 1, b.arity - 1
    a0, a1 = _bits.cofactors(a.bits, a.arity, 0)
    b0, b1 = _bits.cofactors(b.bits, b.arity, 0)
    bits = _bits.outer(a0, n, b0, m) | _bits.outer(a1, n, b1, m)
    return Relation(a.k, a.sorts[1:] + b.sorts[1:], bits)


def eo_forall(rel):
    """rho'(x..) = forall y: rho(y, x..)."""
    if rel.arity < 1:
        raise ValueError("nothing to quantify")
    return Relation(rel.k, rel.sorts[1:], _bits.forall(rel.bits, rel.arity, 0))


def eo_exists(rel):
    if rel.arity < 1:
        raise ValueError("nothing to quantify")
    return Relation(rel.k, rel.sorts[1:], _bits.exists(rel.bits, rel.arity, 0))


def eo_conjoin(a, b):
    if a.k != b.k or a.sorts != b.sorts:
        raise ValueError("conjunction needs equal sort vectors")
    return Relation(a.k, a.sorts, a.bits & b.bits)


# -- symbolic fast path ------------------------------------------------------


def _drop_leading(eq):
    n = eq.arity - 1
    return LinearEquation(n, eq.mask & ((1 << n) - 1), eq.rhs)


def _solving_clause(df):
    """Canonicalize and split into (clause mentioning the leading variable, the rest)."""
    canon = canonicalize(df)
    lead = 1 << (df.arity - 1)
    hits = [c for c in canon.clauses if c.mask & lead]
    rest = [c for c in canon.clauses if not c.mask & lead]
    return (hits[0] if hits else None), rest


def forall_form(df):
    """Universal quantification of the leading variable on a disjunctive form.

    In the canonical form at most one clause mentions the leading variable;
    dropping it is exactly the quantification.
    """
    if df.arity < 1:
        raise ValueError("nothing to quantify")
    _, rest = _solving_clause(df)
    return DisjunctiveForm(df.k, df.sorts[1:], tuple(_drop_leading(c) for c in rest))


def compose_form(a, b):
    """Composition on disjunctive forms: join the two z-solving clauses, keep the rest."""
    if a.k != b.k or a.arity < 1 or b.arity < 1 or a.sorts[0] != b.sorts[0]:
        raise ValueError("composition needs matching leading sorts")
    ha, ra = _solving_clause(a)
    hb, rb = _solving_clause(b)
    if ha is None or hb is None:
        raise ValueError("composition on a dummy variable")
    n, m = a.arity - 1, b.arity - 1
    # z = f(x) + r_a and z = g(y) + r_b join to f(x) + g(y) = r_a + r_b
    la, lb = _drop_leading(ha), _drop_leading(hb)
    joined = LinearEquation(n + m, (la.mask << m) | lb.mask, ha.rhs ^ hb.rhs)
    left = [LinearEquation(n + m, _drop_leading(c).mask << m, c.rhs) for c in ra]
    right = [LinearEquation(n + m, _drop_leading(c).mask, c.rhs) for c in rb]
    return DisjunctiveForm(a.k, a.sorts[1:] + b.sorts[1:], tuple([joined] + left + right))


def essential(rel):
    return [i for i in range(rel.arity) if i not in dummy_positions(rel)]
