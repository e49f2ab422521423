"""Canonical relations: descriptors, classification, single-generator closures, downsets.

Descriptor kinds are numbered 1..7:

    1  x=0 | y=1                 (sort i)
    2  x=y | u=b                 (x, y of sort i, u of sort j)
    3  x=y | u=v                 (i != j, "cross")   or   x=y | y=z  (sort i, "chain")
    4  x+y=1                     (sort i)
    5  x+y=u+v                   (x, y of sort i, u, v of sort j; i <= j)
    6  x1+..+xn=b                (n >= 2 pairwise distinct sorts)
    7  per sort s, m_s literals x=0 or n_s literals x=1 (never both)

Sorts are 1-based throughout, as in the relation type.
"""
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

from . import _bits
from .gf2 import DisjunctiveForm, LinearEquation, materialize as materialize_form, to_disjunctive_form
from .relation import canonical_key, drop_dummies, dummy_positions


@dataclass(frozen=True, order=True)
class CanonicalDescriptor:
    kind: int
    k: int
    sorts: tuple = ()
    b: int = 0
    counts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(self.sorts))
        object.__setattr__(self, "counts", tuple(self.counts))
        if not 1 <= self.kind <= 7:
            raise ValueError(f"unknown canonical kind {self.kind}")
        if any(not 1 <= s <= self.k for s in self.sorts):
            raise ValueError(f"sort outside 1..{self.k}")
        if self.b not in (0, 1):
            raise ValueError("b must be 0 or 1")
        need = {1: (1,), 2: (2,), 3: (1, 2), 4: (1,), 5: (2,), 7: (0,)}
        if self.kind == 6:
            if len(self.sorts) < 2 or list(self.sorts) != sorted(set(self.sorts)):
                raise ValueError("kind 6 needs at least two distinct sorts, ascending")
        elif len(self.sorts) not in need[self.kind]:
            raise ValueError(f"kind {self.kind} takes {need[self.kind]} sorts")
        if self.kind == 3 and len(self.sorts) == 2 and not self.sorts[0] < self.sorts[1]:
            raise ValueError("cross kind 3 needs sorts i < j")
        if self.kind == 5 and self.sorts[0] > self.sorts[1]:
            raise ValueError("kind 5 needs sorts i <= j")
        if self.kind == 7:
            c = self.counts
            if len(c) != 2 * self.k or any(v < 0 for v in c):
                raise ValueError("kind 7 needs 2k non-negative counts")
            if any(c[2 * s] and c[2 * s + 1] for s in range(self.k)):
                raise ValueError("a sort cannot carry both =0 and =1 literals")
            if not sum(c):
                raise ValueError("kind 7 needs at least one literal")
        elif self.counts:
            raise ValueError("counts only apply to kind 7")

    @property
    def arity(self):
        return {1: 2, 2: 3, 4: 2, 5: 4}.get(self.kind) or {
            3: 4 if len(self.sorts) == 2 else 3,
            6: len(self.sorts),
            7: sum(self.counts),
        }[self.kind]

    @property
    def finite_part(self):
        """Kinds 1-6 (finitely many per k) as opposed to kind 7."""
        return self.kind != 7

    @property
    def chain(self):
        return self.kind == 3 and len(self.sorts) == 1

    def __str__(self):
        if self.kind == 7:
            return "c7(" + ",".join(map(str, self.counts)) + ")"
        inner = ",".join(map(str, self.sorts))
        if self.kind in (2, 6):
            inner += f";b={self.b}"
        return f"c{self.kind}({inner})"

    def formula(self):
        """Readable generator, e.g. "x=0 ∨ y=1"; sorts shown as ^s when k > 1."""
        tag = (lambda s: f"^{s}") if self.k > 1 else (lambda s: "")
        s = self.sorts
        if self.kind == 1:
            return f"x{tag(s[0])}=0 ∨ y{tag(s[0])}=1"
        if self.kind == 2:
            return f"x{tag(s[0])}=y{tag(s[0])} ∨ u{tag(s[1])}={self.b}"
        if self.kind == 3:
            if self.chain:
                return f"x{tag(s[0])}=y{tag(s[0])} ∨ y{tag(s[0])}=z{tag(s[0])}"
            return f"x{tag(s[0])}=y{tag(s[0])} ∨ u{tag(s[1])}=v{tag(s[1])}"
        if self.kind == 4:
            return f"x{tag(s[0])}+y{tag(s[0])}=1"
        if self.kind == 5:
            return f"x{tag(s[0])}+y{tag(s[0])}=u{tag(s[1])}+v{tag(s[1])}"
        if self.kind == 6:
            return "+".join(f"x{i + 1}{tag(t)}" for i, t in enumerate(s)) + f"={self.b}"
        lits = []
        for sort, bit in _literal_sorts(self):
            lits.append(f"x{len(lits) + 1}{tag(sort)}={bit}")
        return " ∨ ".join(lits)


_DESC_RE = re.compile(r"c([1-7])\(([\d,]*)(?:;b=([01]))?\)$")


def parse_descriptor(text, k):
    """Inverse of str(descriptor) for a known k."""
    m = _DESC_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad descriptor {text!r}")
    kind = int(m.group(1))
    nums = tuple(int(v) for v in m.group(2).split(",") if v)
    b = int(m.group(3) or 0)
    if kind == 7:
        return CanonicalDescriptor(7, k, counts=nums)
    return CanonicalDescriptor(kind, k, nums, b)


def _literal_sorts(d):
    """(sort, bit) per literal of a kind-7 descriptor, sorts ascending."""
    out = []
    for s in range(d.k):
        m, n = d.counts[2 * s], d.counts[2 * s + 1]
        out += [(s + 1, 0)] * m + [(s + 1, 1)] * n
    return out


def _eq(n, vars_, rhs):
    mask = 0
    for v in vars_:
        mask ^= 1 << (n - 1 - v)
    return LinearEquation(n, mask, rhs)


def disjunctive_form(d):
    """The descriptor's defining disjunction, variables in display order."""
    s = d.sorts
    if d.kind == 1:
        sorts, clauses = (s[0], s[0]), [((0,), 0), ((1,), 1)]
    elif d.kind == 2:
        sorts, clauses = (s[0], s[0], s[1]), [((0, 1), 0), ((2,), d.b)]
    elif d.kind == 3 and d.chain:
        sorts, clauses = (s[0],) * 3, [((0, 1), 0), ((1, 2), 0)]
    elif d.kind == 3:
        sorts, clauses = (s[0], s[0], s[1], s[1]), [((0, 1), 0), ((2, 3), 0)]
    elif d.kind == 4:
        sorts, clauses = (s[0], s[0]), [((0, 1), 1)]
    elif d.kind == 5:
        sorts, clauses = (s[0], s[0], s[1], s[1]), [((0, 1, 2, 3), 0)]
    elif d.kind == 6:
        sorts, clauses = s, [(tuple(range(len(s))), d.b)]
    else:
        lits = _literal_sorts(d)
        sorts = tuple(sort for sort, _ in lits)
        clauses = [((i,), bit) for i, (_, bit) in enumerate(lits)]
    n = len(sorts)
    return DisjunctiveForm(d.k, sorts, tuple(_eq(n, v, r) for v, r in clauses))


def materialize(d):
    return materialize_form(disjunctive_form(d))


# -- enumeration ---------------------------------------------------------------


def _finite_part(k):
    out = []
    sorts = range(1, k + 1)
    for i in sorts:
        out.append(CanonicalDescriptor(1, k, (i,)))
    for i, j, b in product(sorts, sorts, (0, 1)):
        out.append(CanonicalDescriptor(2, k, (i, j), b))
    for i in sorts:
        out.append(CanonicalDescriptor(3, k, (i,)))
    for i, j in combinations(sorts, 2):
        out.append(CanonicalDescriptor(3, k, (i, j)))
    for i in sorts:
        out.append(CanonicalDescriptor(4, k, (i,)))
    for i in sorts:
        for j in range(i, k + 1):
            out.append(CanonicalDescriptor(5, k, (i, j)))
    for size in range(2, k + 1):
        for ss in combinations(sorts, size):
            for b in (0, 1):
                out.append(CanonicalDescriptor(6, k, ss, b))
    return out


def kind7(k, max_arity):
    """Every kind 7 descriptor with at most max_arity literals."""
    out = []
    for per_sort in product(range(-max_arity, max_arity + 1), repeat=k):
        total = sum(abs(v) for v in per_sort)
        if not 1 <= total <= max_arity:
            continue
        counts = []
        for v in per_sort:
            counts += [v, 0] if v >= 0 else [0, -v]
        out.append(CanonicalDescriptor(7, k, counts=tuple(counts)))
    return out


def _order(d):
    return (d.arity, d.kind, d.sorts, d.b, d.counts)


def enumerate_CR(k, max_arity):
    """Every canonical relation of arity <= max_arity, once each, in a fixed order."""
    if max_arity < 1:
        raise ValueError("max_arity must be at least 1")
    found = [d for d in _finite_part(k) if d.arity <= max_arity] + kind7(k, max_arity)
    return sorted(found, key=_order)


def finite_part(k):
    """The kind 1-6 canonical relations for k sorts."""
    return sorted(_finite_part(k), key=_order)


@lru_cache(maxsize=None)
def _lookup(k):
    table = {}
    for d in _finite_part(k):
        rel = materialize(d)
        key = canonical_key(rel.sorts, rel.bits)
        if key in table:  # pragma: no cover - guarded by tests
            raise AssertionError(f"{d} and {table[key]} coincide")
        table[key] = d
    return table


def _single_point(rel):
    """The one tuple missing from rel, or None."""
    comp = _bits.full_mask(rel.arity) & ~rel.bits
    if comp and comp & (comp - 1) == 0:
        return _bits.tuple_of(comp.bit_length() - 1, rel.arity)
    return None


def _as_c7(rel):
    point = _single_point(rel)
    if point is None:
        return None
    counts = [0] * (2 * rel.k)
    for s, a in zip(rel.sorts, point):
        # the literal is x = 1 - a
        counts[2 * (s - 1) + (1 - a)] += 1
    if any(counts[2 * s] and counts[2 * s + 1] for s in range(rel.k)):
        return None
    return CanonicalDescriptor(7, rel.k, counts=tuple(counts))


def classify(rel):
    """The descriptor of the canonical relation similar to rel, or None."""
    if rel.arity == 0 or dummy_positions(rel):
        return None
    d = _as_c7(rel)
    if d is not None:
        return d
    return _lookup(rel.k).get(canonical_key(rel.sorts, rel.bits))


def mu(d):
    if d.kind != 7:
        raise ValueError(f"{d} is not of kind 7")
    return d.counts


# -- single-generator closures -----------------------------------------------


def _shape(rel):
    """(sorts, clauses) of rel without dummies, or None if rel is not key."""
    if isinstance(rel, DisjunctiveForm):
        rel = materialize_form(rel)
    core, _ = drop_dummies(rel)
    df = to_disjunctive_form(core)
    if df is None:
        return None
    return core, [(c.support, c.rhs) for c in df.clauses]


def is_trivial(rel):
    """Is rel (up to dummies) in the closure of the empty language?

    Those are the full and empty relations and the equalities; any other
    conjunction of equalities is not a key relation.
    """
    core, _ = drop_dummies(rel)
    if core.arity == 0:
        return True
    return core.arity == 2 and core.sorts[0] == core.sorts[1] and core.bits == 0b1001


def _same_class(rel, d):
    m = materialize(d)
    return rel.arity == m.arity and canonical_key(rel.sorts, rel.bits) == canonical_key(m.sorts, m.bits)


def _sort_counts(core, support):
    counts = {}
    for v in support:
        counts[core.sorts[v]] = counts.get(core.sorts[v], 0) + 1
    return counts


class SingleGeneratorClosure:
    """Decides membership of key relations in the quantified closure of one canonical relation.

    The accepted relations are the listed patterns of the closure table, up to
    variable order and dummy variables, plus the trivial relations.
    """

    def __init__(self, d):
        self.descriptor = d

    def __call__(self, rel):
        return self.contains(rel)

    def contains(self, rel):
        if isinstance(rel, DisjunctiveForm):
            rel = materialize_form(rel)
        if rel.k != self.descriptor.k:
            raise ValueError("k mismatch")
        if is_trivial(rel):
            return True
        shape = _shape(rel)
        if shape is None:
            return False
        core, clauses = shape
        return getattr(self, f"_kind{self.descriptor.kind}")(core, clauses)

    def _kind1(self, core, clauses):
        # forall y (x=0 | y=1) is x=0, and dually x=1
        if core.arity == 1:
            return core.sorts[0] == self.descriptor.sorts[0]
        return _same_class(core, self.descriptor)

    def _kind4(self, core, clauses):
        return _same_class(core, self.descriptor)

    def _kind2(self, core, clauses):
        i, j = self.descriptor.sorts
        b = self.descriptor.b
        pairs = [(s, r) for s, r in clauses if len(s) == 2]
        units = [(s, r) for s, r in clauses if len(s) == 1]
        if len(pairs) + len(units) != len(clauses) or len(pairs) > 1 or not units:
            return False
        if pairs:
            (x, y), r = pairs[0]
            if r != 0 or core.sorts[x] != i or core.sorts[y] != i:
                return False
        if any(core.sorts[s[0]] != j for s, _ in units):
            return False
        wrong = sum(1 for _, r in units if r != b)
        if i != j or pairs:
            return wrong == 0
        return wrong <= 1

    def _kind3(self, core, clauses):
        # conjunctions of single-sort clauses reach x+y=u+v, so each clause
        # only needs an even number of variables within every sort
        for support, _ in clauses:
            if any(c % 2 for c in _sort_counts(core, support).values()):
                return False
        return set(core.sorts) <= set(self.descriptor.sorts)

    def _kind5(self, core, clauses):
        if len(clauses) != 1 or clauses[0][1] != 0:
            return False
        counts = _sort_counts(core, clauses[0][0])
        if not set(counts) <= set(self.descriptor.sorts):
            return False
        return all(c % 2 == 0 for c in counts.values())

    def _kind6(self, core, clauses):
        d = self.descriptor
        if len(d.sorts) == 2:
            return _same_class(core, d)
        if len(clauses) != 1:
            return False
        support, rhs = clauses[0]
        counts = _sort_counts(core, support)
        if not set(counts) <= set(d.sorts):
            return False
        if all(c % 2 == 0 for c in counts.values()):
            return rhs == 0
        return rhs == d.b and all(counts.get(s, 0) % 2 == 1 for s in d.sorts)

    def _kind7(self, core, clauses):
        if any(len(s) != 1 for s, _ in clauses):
            return False
        sub = _as_c7(core)
        if sub is None:
            return False
        return all(a <= b for a, b in zip(sub.counts, self.descriptor.counts))


def single_generator_closure(d):
    return SingleGeneratorClosure(d)


# -- downsets of N_0^{2k} -------------------------------------------------------


def _leq(p, q):
    return all(a <= b for a, b in zip(p, q))


@dataclass(frozen=True)
class Downset:
    """A downset of N_0^dim kept as the antichain of its maximal points."""

    dim: int
    maximal: tuple = ()

    def __post_init__(self):
        pts = sorted(set(tuple(p) for p in self.maximal))
        for p in pts:
            if len(p) != self.dim:
                raise ValueError(f"point {p} has length {len(p)}, expected {self.dim}")
        pts = [p for p in pts if not any(p != q and _leq(p, q) for q in pts)]
        object.__setattr__(self, "maximal", tuple(pts))

    def __contains__(self, p):
        return any(_leq(tuple(p), q) for q in self.maximal)

    def __le__(self, other):
        return downset_leq(self, other)

    def __bool__(self):
        return bool(self.maximal)

    def __iter__(self):
        return iter(self.maximal)

    def __len__(self):
        return len(self.maximal)


def downset_insert(ds, p):
    p = tuple(p)
    if len(p) != ds.dim:
        raise ValueError(f"point {p} has length {len(p)}, expected {ds.dim}")
    if p in ds:
        return ds
    keep = tuple(q for q in ds.maximal if not _leq(q, p))
    return Downset(ds.dim, keep + (p,))


def downset_leq(a, b):
    if a.dim != b.dim:
        raise ValueError("downsets of different dimension")
    return all(p in b for p in a.maximal)
