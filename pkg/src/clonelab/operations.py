"""k-operations, bounded polymorphism/invariant oracles and clone generation.

Sets of operations of one arity m are encoded as bitmasks over all
2**(k * 2**m) operations: operation code c has coordinate s's table in bits
s*2**m .. (s+1)*2**m - 1 of c, and bit r of a table is the value on the input
tuple spelled by r.  Preservation constraints are evaluated bit-sliced over
the whole universe at once.
"""
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np


from . import _bits
from .relation import Relation

DEFAULT_BUDGET = 20


class BudgetError(ValueError):
    """An enumeration would exceed the configured table-bit budget."""


def budget():
    raw = os.environ.get("CLONELAB_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


def check_budget(bits, what="operation tables"):
    if bits > budget():
        raise BudgetError(f"{what} need {bits} bits, budget is {budget()} (set CLONELAB_BUDGET)")


def max_op_arity(k):
    """Largest arity whose k-operation tables fit the budget."""
    m = 0
    while k << (m + 1) <= budget():
        m += 1
    return m


@dataclass(frozen=True)
class KOperation:
    k: int
    arity: int
    tables: tuple

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        if len(self.tables) != self.k:
            raise ValueError("need one table per coordinate")
        if any(t < 0 or t >> (1 << self.arity) for t in self.tables):
            raise ValueError("table wider than 2**arity")

    @property
    def code(self):
        w = 1 << self.arity
        return sum(t << (s * w) for s, t in enumerate(self.tables))

    @classmethod
    def from_code(cls, k, arity, code):
        w = 1 << arity
        mask = (1 << w) - 1
        return cls(k, arity, tuple((code >> (s * w)) & mask for s in range(k)))

    def value(self, coord, args):
        """f^(coord)(args); coord is 0-based."""
        return (self.tables[coord] >> _bits.index_of(args)) & 1

    @property
    def is_surjective(self):
        full = _bits.full_mask(self.arity)
        return self.arity >= 1 and all(t not in (0, full) for t in self.tables)

    def encoding(self):
        """Value tuple listing each coordinate's table in input order."""
        w = 1 << self.arity
        return tuple((t >> r) & 1 for t in self.tables for r in range(w))

    @classmethod
    def from_encoding(cls, k, arity, values):
        w = 1 << arity
        values = tuple(values)
        if len(values) != k * w:
            raise ValueError("encoding length mismatch")
        return cls(k, arity, tuple(sum(values[s * w + r] << r for r in range(w)) for s in range(k)))


def projection(k, n, i):
    t = _bits.var_mask(n, i)
    return KOperation(k, n, (t,) * k)


def constant(k, n, c):
    return KOperation(k, n, ((_bits.full_mask(n) if c else 0),) * k)


def identity(k):
    return projection(k, 1, 0)


def negation(k=1):
    return KOperation(k, 1, (0b01,) * k)


def compose_ops(f, gs):
    """h^(s)(x) = f^(s)(g_1^(s)(x), .., g_m^(s)(x))."""
    gs = list(gs)
    if len(gs) != f.arity:
        raise ValueError(f"{f.arity}-ary operation needs {f.arity} arguments")
    if any(g.k != f.k for g in gs):
        raise ValueError("k mismatch")
    if len({g.arity for g in gs}) > 1:
        raise ValueError("inner operations of different arities")
    n = gs[0].arity if gs else 0
    if not gs:
        return KOperation(f.k, 0, tuple(t & 1 for t in f.tables))
    full = _bits.full_mask(n)
    tables = []
    for s in range(f.k):
        inner = [g.tables[s] for g in gs]
        tables.append(_apply_table(f.tables[s], f.arity, inner, full))
    return KOperation(f.k, n, tuple(tables))


def _apply_table(outer, m, inner, full):
    out = 0
    for u in _bits.iter_bits(outer):
        term = full
        for t in range(m):
            term &= inner[t] if (u >> (m - 1 - t)) & 1 else full ^ inner[t]
        out |= term
    return out


def preserves(f, rel):
    if f.k != rel.k:
        raise ValueError("k mismatch")
    if rel.bits == 0 or rel.arity == 0:
        return True
    tuples = list(rel)
    for cols in product(tuples, repeat=f.arity):
        out = []
        for j, s in enumerate(rel.sorts):
            out.append(f.value(s - 1, [c[j] for c in cols]))
        if not (rel.bits >> _bits.index_of(out)) & 1:
            return False
    return True


# -- bit-sliced universes ----------------------------------------------------


@lru_cache(maxsize=None)
def _universe(k, m):
    """(full mask, per-position literal masks) for k-operations of arity m."""
    nbits = k << m
    check_budget(nbits)
    size = 1 << nbits
    full = (1 << size) - 1
    lits = []
    for pos in range(nbits):
        w = 1 << pos
        unit = ((1 << w) - 1) << w
        lits.append(full // ((1 << (2 * w)) - 1) * unit)
    neg = [full ^ b for b in lits]
    return full, lits, neg


@lru_cache(maxsize=None)
def surjective_mask(k, m):
    full, lits, neg = _universe(k, m)
    w = 1 << m
    mask = full
    for s in range(k):
        zero, one = full, full
        for r in range(w):
            zero &= neg[s * w + r]
            one &= lits[s * w + r]
        mask &= full ^ (zero | one)
    return mask


@lru_cache(maxsize=1 << 12)
def _constraints(rel, m):
    """Distinct table-position tuples that every polymorphism must map into rel."""
    w = 1 << m
    tuples = np.array(list(rel), dtype=np.int64).reshape(-1, rel.arity)
    rows = np.zeros((1, rel.arity), dtype=np.int64)
    for _ in range(m):
        rows = ((rows[:, None, :] << 1) | tuples[None, :, :]).reshape(-1, rel.arity)
        rows = np.unique(rows, axis=0)
    offset = (np.array(rel.sorts, dtype=np.int64) - 1) * w
    return frozenset(map(tuple, (rows + offset).tolist()))


def _violations(rel, m):
    """Yield, per constraint, the mask of operations that break it."""
    full, lits, neg = _universe(rel.k, m)
    n = rel.arity
    bad = [t for t in range(1 << n) if not (rel.bits >> t) & 1]
    for key in _constraints(rel, m):
        for t in bad:
            conflict = full
            for j in range(n):
                conflict &= lits[key[j]] if (t >> (n - 1 - j)) & 1 else neg[key[j]]
                if not conflict:
                    break
            if conflict:
                yield conflict


@lru_cache(maxsize=1 << 14)
def pol_mask(rel, m):
    """Mask of all arity-m k-operations preserving rel."""
    full, _, _ = _universe(rel.k, m)
    if rel.bits == 0 or rel.arity == 0:
        return full
    mask = full
    for conflict in _violations(rel, m):
        mask &= ~conflict
    return mask


def slice_partners(m):
    """Tables used at the fixed coordinates of a slice: the first projection,
    then every nonconstant symmetric function of arity m."""
    out = [_bits.var_mask(m, 0)]
    for pattern in range(1, (1 << (m + 1)) - 1):
        t = sum(1 << r for r in range(1 << m) if (pattern >> bin(r).count("1")) & 1)
        if t not in out:
            out.append(t)
    return out


@lru_cache(maxsize=1 << 16)
def pol_mask_slice(rel, m, sort, fixed):
    """Mask over arity-m 1-tables f: the k-operation with f at ``sort`` and the
    table ``fixed`` at every other sort preserves rel."""
    full, lits, neg = _universe(1, m)
    if rel.bits == 0 or rel.arity == 0:
        return full
    n = rel.arity
    w = 1 << m
    free = [j for j in range(n) if rel.sorts[j] == sort]
    bound = [j for j in range(n) if rel.sorts[j] != sort]
    bad = [tuple((t >> (n - 1 - j)) & 1 for j in range(n)) for t in range(1 << n) if not (rel.bits >> t) & 1]
    forbidden = set()
    for key in _constraints(rel, m):
        image = [(fixed >> (key[j] % w)) & 1 for j in bound]
        for t in bad:
            if any(t[j] != v for j, v in zip(bound, image)):
                continue
            need = {}
            for j in free:
                row = key[j] % w
                if need.setdefault(row, t[j]) != t[j]:
                    break
            else:
                forbidden.add(tuple(sorted(need.items())))
    mask = full
    for need in forbidden:
        conflict = full
        for row, v in need:
            conflict &= lits[row] if v else neg[row]
        mask &= ~conflict
    return mask


def preserved_by_mask(rel, m, fmask):
    """True iff every operation in fmask preserves rel (early exit)."""
    if rel.bits == 0 or rel.arity == 0 or not fmask:
        return True
    for conflict in _violations(rel, m):
        if conflict & fmask:
            return False
    return True


class OpSet:
    """A finite set of k-operations, kept as one bitmask per arity."""

    def __init__(self, k, masks=None):
        self.k = k
        self.masks = {a: v for a, v in (masks or {}).items() if v}

    @classmethod
    def from_ops(cls, k, ops):
        masks = {}
        for f in ops:
            if f.k != k:
                raise ValueError("k mismatch")
            _universe(k, f.arity)
            masks[f.arity] = masks.get(f.arity, 0) | (1 << f.code)
        return cls(k, masks)

    def of_arity(self, a):
        return OpSet(self.k, {a: self.masks.get(a, 0)})

    @property
    def arities(self):
        return sorted(self.masks)

    def __iter__(self):
        for a in self.arities:
            for c in _bits.iter_bits(self.masks[a]):
                yield KOperation.from_code(self.k, a, c)

    def __len__(self):
        return sum(_bits.popcount(v) for v in self.masks.values())

    def __contains__(self, f):
        return f.k == self.k and bool((self.masks.get(f.arity, 0) >> f.code) & 1)

    def __eq__(self, other):
        return isinstance(other, OpSet) and self.k == other.k and self.masks == other.masks

    def __hash__(self):
        return hash((self.k, tuple(sorted(self.masks.items()))))

    def __le__(self, other):
        return all(v & ~other.masks.get(a, 0) == 0 for a, v in self.masks.items())

    def __and__(self, other):
        return OpSet(self.k, {a: v & other.masks.get(a, 0) for a, v in self.masks.items()})

    def __or__(self, other):
        masks = dict(self.masks)
        for a, v in other.masks.items():
            masks[a] = masks.get(a, 0) | v
        return OpSet(self.k, masks)

    def __sub__(self, other):
        return OpSet(self.k, {a: v & ~other.masks.get(a, 0) for a, v in self.masks.items()})

    def surjective(self):
        return OpSet(self.k, {a: v & surjective_mask(self.k, a) for a, v in self.masks.items()})

    def __repr__(self):
        return f"OpSet(k={self.k}, sizes={ {a: _bits.popcount(v) for a, v in sorted(self.masks.items())} })"


def pol_bounded(S, max_arity, surjective_only=False, k=None):
    """All k-operations of arity 1..max_arity preserving every relation of S."""
    S = list(S)
    k = _common_k(S, k)
    masks = {}
    for a in range(1, max_arity + 1):
        full, _, _ = _universe(k, a)
        mask = surjective_mask(k, a) if surjective_only else full
        for rel in S:
            mask &= pol_mask(rel, a)
        masks[a] = mask
    return OpSet(k, masks)


def spol_bounded(S, max_arity, k=None):
    return pol_bounded(S, max_arity, surjective_only=True, k=k)


def _common_k(S, k):
    ks = {r.k for r in S}
    if k is not None:
        ks.add(k)
    if len(ks) != 1:
        raise ValueError("relations over different k (or k unknown for an empty set)")
    return ks.pop()


def all_relations(k, max_arity):
    """Every k-sorted relation of arity <= max_arity (all sort vectors)."""
    for n in range(max_arity + 1):
        for sorts in product(range(1, k + 1), repeat=n):
            for b in range(1 << (1 << n)):
                yield Relation(k, sorts, b)


def inv_bounded(F, max_arity):
    """All relations of arity <= max_arity (every sort vector) preserved by F."""
    k = F.k
    check_budget((1 << max_arity) + max_arity * (k - 1).bit_length(), "relation enumeration")
    return [rel for rel in all_relations(k, max_arity)
            if all(preserved_by_mask(rel, a, v) for a, v in F.masks.items())]


def indicator(F, n):
    """The relation listing the value tables of F's n-ary members."""
    k = F.k
    width = k << n
    check_budget(width, "indicator arity")
    bits = 0
    for code in _bits.iter_bits(F.masks.get(n, 0)):
        # encoding position p sits at relation index bit width-1-p
        t = int(format(code, f"0{width}b")[::-1], 2)
        bits |= 1 << t
    return Relation(k, tuple(s + 1 for s in range(k) for _ in range(1 << n)), bits)


def least_invariant_superset(rel, F):
    """Close rel's tuple set under coordinatewise application of F's members."""
    if F.k != rel.k:
        raise ValueError("k mismatch")
    cur = rel.bits
    while True:
        grown = cur
        for a, fmask in F.masks.items():
            grown |= _images(Relation(rel.k, rel.sorts, cur), a, fmask)
        if grown == cur:
            return Relation(rel.k, rel.sorts, cur)
        cur = grown


def _images(rel, m, fmask):
    """All tuples f(cols) for f in fmask and cols drawn from rel."""
    if rel.bits == 0 or rel.arity == 0:
        return rel.bits
    full, lits, neg = _universe(rel.k, m)
    n = rel.arity
    out = 0
    for key in _constraints(rel, m):
        for t in range(1 << n):
            if (out >> t) & 1:
                continue
            hit = fmask
            for j in range(n):
                hit &= lits[key[j]] if (t >> (n - 1 - j)) & 1 else neg[key[j]]
                if not hit:
                    break
            if hit:
                out |= 1 << t
    return out


def adjoin_constants(S, which):
    """Keep the relations of S preserved by the chosen constants (0 and/or 1)."""
    which = set(which)
    if not which <= {0, 1}:
        raise ValueError("constants are 0 and 1")
    out = []
    for rel in S:
        n = rel.arity
        ok = rel.bits == 0 or all((rel.bits >> (((1 << n) - 1) if c else 0)) & 1 for c in which)
        if ok:
            out.append(rel)
    return out


# -- clone generation --------------------------------------------------------


def projections(k, max_arity):
    return [projection(k, n, i) for n in range(1, max_arity + 1) for i in range(n)]


def clo_generate(F, max_arity, k=None):
    """The members of arity <= max_arity of the clone generated by F.

    Generators of larger arity are ignored.  For each arity n the n-ary part
    is the smallest set of n-ary tables containing the projections and closed
    under applying generators pointwise.
    """
    F = list(F)
    k = _common_k_ops(F, k)
    gens = [g for g in F if 1 <= g.arity <= max_arity]
    out = []
    for n in range(1, max_arity + 1):
        out.extend(_generate_arity(k, n, gens))
    return OpSet.from_ops(k, out)


def _common_k_ops(F, k):
    ks = {f.k for f in F}
    if k is not None:
        ks.add(k)
    if len(ks) != 1:
        raise ValueError("operations over different k (or k unknown for an empty set)")
    return ks.pop()


def _generate_arity(k, n, gens):
    full = _bits.full_mask(n)
    elems = {projection(k, n, i).tables for i in range(n)}
    frontier = set(elems)
    while frontier:
        fresh = set()
        pool = list(elems)
        for g in gens:
            for args in product(pool, repeat=g.arity):
                if not any(a in frontier for a in args):
                    continue
                img = tuple(_apply_table(g.tables[s], g.arity, [a[s] for a in args], full) for s in range(k))
                if img not in elems:
                    fresh.add(img)
        elems |= fresh
        frontier = fresh
    return [KOperation(k, n, t) for t in sorted(elems)]


def is_clone_bounded(C, max_arity):
    """Closed under composition (results of arity <= max_arity) and contains projections."""
    ops = list(C)
    if not ops:
        return False
    return clo_generate(ops, max_arity, k=C.k) == C
