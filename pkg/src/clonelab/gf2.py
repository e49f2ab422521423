"""GF(2) linear equations, the key-relation test and disjunctive normal forms.

A key relation is a disjunction of linear equations over GF(2); equivalently
its complement is an affine subspace (or empty).  The canonical disjunctive
form negates each row of the complement's reduced row-echelon system.
"""
from dataclasses import dataclass
from functools import lru_cache

from . import _bits
from .relation import Relation, is_similar


@lru_cache(maxsize=None)
def _parity_table(n):
    par = [0] * (1 << n)
    for t in range(1, 1 << n):
        par[t] = par[t >> 1] ^ (t & 1)
    return par


@lru_cache(maxsize=1 << 16)
def solution_bits(n, mask, rhs):
    """Bit vector of the tuples satisfying <mask, x> = rhs."""
    b = 0
    for t in range(1 << n):
        if _bits.popcount(t & mask) & 1 == rhs:
            b |= 1 << t
    return b


@dataclass(frozen=True)
class LinearEquation:
    """sum of the variables selected by ``mask`` equals ``rhs`` (mod 2).

    ``mask`` uses the tuple-index convention: variable i is bit arity-1-i.
    """

    arity: int
    mask: int
    rhs: int

    def __post_init__(self):
        if self.mask >> self.arity:
            raise ValueError("coefficient mask wider than arity")
        if self.rhs not in (0, 1):
            raise ValueError("rhs must be 0 or 1")

    @classmethod
    def from_coeffs(cls, coeffs, rhs):
        coeffs = tuple(coeffs)
        return cls(len(coeffs), _bits.index_of(coeffs), rhs)

    @property
    def coeffs(self):
        return _bits.tuple_of(self.mask, self.arity)

    @property
    def support(self):
        return [i for i, a in enumerate(self.coeffs) if a]

    @property
    def pivot(self):
        """Leftmost variable with a nonzero coefficient, or None."""
        if not self.mask:
            return None
        return self.arity - self.mask.bit_length()

    def solutions(self):
        return solution_bits(self.arity, self.mask, self.rhs)

    def holds(self, values):
        return _bits.popcount(_bits.index_of(values) & self.mask) & 1 == self.rhs

    def __str__(self):
        return format_equation(self)


def format_equation(eq, names=None):
    names = names or [f"x{i + 1}" for i in range(eq.arity)]
    lhs = "+".join(names[i] for i in eq.support) or "0"
    return f"{lhs}={eq.rhs}"


@dataclass(frozen=True)
class AffineSystem:
    arity: int
    rows: tuple

    @property
    def inconsistent(self):
        return len(self.rows) == 1 and self.rows[0].mask == 0 and self.rows[0].rhs == 1

    def solutions(self):
        b = _bits.full_mask(self.arity)
        for r in self.rows:
            b &= r.solutions()
        return b


def _rref_rows(n, rows):
    rows = [list(r) for r in rows]
    out = []
    for col in range(n):
        bit = 1 << (n - 1 - col)
        hit = next((r for r in rows if r[0] & bit), None)
        if hit is None:
            continue
        rows.remove(hit)
        for r in rows + out:
            if r[0] & bit:
                r[0] ^= hit[0]
                r[1] ^= hit[1]
        out.append(hit)
    if any(r[1] for r in rows):  # leftover rows are 0 = rhs
        return [(0, 1)]
    return [tuple(r) for r in out]


def rref(equations, arity=None):
    """Gauss-Jordan elimination with leftmost pivots."""
    equations = list(equations)
    if arity is None:
        if not equations:
            raise ValueError("arity needed for an empty system")
        arity = equations[0].arity
    if any(e.arity != arity for e in equations):
        raise ValueError("equations of different arities")
    rows = _rref_rows(arity, [(e.mask, e.rhs) for e in equations])
    return AffineSystem(arity, tuple(LinearEquation(arity, m, r) for m, r in rows))


def _xor_basis(vectors):
    basis = {}
    for v in vectors:
        while v:
            top = v.bit_length()
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return list(basis.values())


def _affine_of(points, n):
    """(base point, direction basis) if the point set is affine, else None."""
    pts = list(_bits.iter_bits(points))
    if not pts:
        return None
    a0 = pts[0]
    basis = _xor_basis(p ^ a0 for p in pts)
    if 1 << len(basis) != len(pts):
        return None
    return a0, basis


@lru_cache(maxsize=1 << 18)
def _complement_rows(n, bits):
    """RREF rows (mask, rhs) of the affine complement, or None if not affine."""
    comp = _bits.full_mask(n) & ~bits
    if comp == 0:
        return ((0, 1),)
    found = _affine_of(comp, n)
    if found is None:
        return None
    a0, basis = found
    # orthogonal complement of the direction space, by brute force on n <= ~10
    rows = []
    for u in range(1, 1 << n):
        if all(_bits.popcount(u & v) & 1 == 0 for v in basis):
            rows.append((u, _bits.popcount(u & a0) & 1))
    return tuple(_rref_rows(n, rows))


def is_key(rel):
    return _complement_rows(rel.arity, rel.bits) is not None


def complement_system(rel):
    rows = _complement_rows(rel.arity, rel.bits)
    if rows is None:
        return None
    return AffineSystem(rel.arity, tuple(LinearEquation(rel.arity, m, r) for m, r in rows))


@dataclass(frozen=True)
class DisjunctiveForm:
    """A relation given as the disjunction of its clauses."""

    k: int
    sorts: tuple
    clauses: tuple

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(self.sorts))
        object.__setattr__(self, "clauses", tuple(self.clauses))
        for s in self.sorts:
            if not 1 <= s <= self.k:
                raise ValueError(f"sort {s} outside 1..{self.k}")
        for c in self.clauses:
            if c.arity != len(self.sorts):
                raise ValueError("clause arity differs from the sort vector")

    @property
    def arity(self):
        return len(self.sorts)

    def __str__(self):
        if not self.clauses:
            return "false"
        return " | ".join(format_equation(c) for c in self.clauses)


def to_disjunctive_form(rel):
    rows = _complement_rows(rel.arity, rel.bits)
    if rows is None:
        return None
    n = rel.arity
    clauses = tuple(LinearEquation(n, m, r ^ 1) for m, r in rows)
    return DisjunctiveForm(rel.k, rel.sorts, clauses)


def materialize(df):
    b = 0
    for c in df.clauses:
        b |= c.solutions()
    return Relation(df.k, df.sorts, b)


def canonicalize(df):
    """The canonical clause list of the relation df denotes."""
    return to_disjunctive_form(materialize(df))


# -- Gauss-Jordan rearrangement --------------------------------------------


@dataclass(frozen=True)
class GaussForm:
    """A key relation rearranged as

        x_i = sum_j a[i][j] y_j + b[i]   (i < m)
        z_h = c[h]                       (h < l)

    all joined by disjunction.  ``order`` lists the original positions of the
    variables x..., y..., z... in that order.
    """

    k: int
    x_sorts: tuple
    y_sorts: tuple
    z_sorts: tuple
    a: tuple
    b: tuple
    c: tuple
    order: tuple

    @property
    def sorts(self):
        return self.x_sorts + self.y_sorts + self.z_sorts

    def clauses(self):
        m, n, l = len(self.x_sorts), len(self.y_sorts), len(self.z_sorts)
        width = m + n + l
        out = []
        for i in range(m):
            coeffs = [0] * width
            coeffs[i] = 1
            for j in range(n):
                coeffs[m + j] = self.a[i][j]
            out.append(LinearEquation.from_coeffs(coeffs, self.b[i]))
        for h in range(l):
            coeffs = [0] * width
            coeffs[m + n + h] = 1
            out.append(LinearEquation.from_coeffs(coeffs, self.c[h]))
        return out

    def relation(self):
        return materialize(DisjunctiveForm(self.k, self.sorts, self.clauses()))


def gauss_rearrangement(rel):
    """Rearrange a key relation into x/y/z blocks.

    Full relations have no such form (every clause of the shape can fail), so
    they raise ValueError, as do non-key relations.
    """
    df = to_disjunctive_form(rel)
    if df is None:
        raise ValueError("not a key relation")
    if rel.is_full:
        raise ValueError("the full relation has no rearranged form")
    n = rel.arity
    pivots = [c.pivot for c in df.clauses]
    free = [v for v in range(n) if v not in pivots]
    xs, zs = [], []
    for c in df.clauses:
        others = [v for v in c.support if v != c.pivot]
        (xs if others else zs).append(c)
    a = tuple(tuple(c.coeffs[v] for v in free) for c in xs)
    b = tuple(c.rhs for c in xs)
    cc = tuple(c.rhs for c in zs)
    order = tuple([c.pivot for c in xs] + free + [c.pivot for c in zs])
    pick = lambda vs: tuple(rel.sorts[v] for v in vs)
    return GaussForm(rel.k, pick(c.pivot for c in xs), pick(free), pick(c.pivot for c in zs), a, b, cc, order)


def rearrangement_round_trip(rel):
    """True iff the rearranged form is similar to rel."""
    return is_similar(gauss_rearrangement(rel).relation(), rel) is not None
