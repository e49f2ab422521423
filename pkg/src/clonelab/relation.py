"""k-sorted Boolean relations stored as bit vectors."""
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

from . import _bits


@dataclass(frozen=True)
class Relation:
    """A k-sorted relation on {0,1}.

    ``sorts[i]`` is the sort (1..k) of variable i; bit t of ``bits`` is set iff
    the tuple spelled by t (variable 0 most significant) is in the relation.
    """

    k: int
    sorts: tuple
    bits: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        object.__setattr__(self, "sorts", tuple(self.sorts))
        for s in self.sorts:
            if not 1 <= s <= self.k:
                raise ValueError(f"sort {s} outside 1..{self.k}")
        if self.bits < 0 or self.bits >> (1 << len(self.sorts)):
            raise ValueError("bit vector longer than 2**arity")

    @property
    def arity(self):
        return len(self.sorts)

    def __len__(self):
        return _bits.popcount(self.bits)

    def __contains__(self, values):
        return bool(evaluate(self, values))

    def __iter__(self):
        n = self.arity
        for t in _bits.iter_bits(self.bits):
            yield _bits.tuple_of(t, n)

    @property
    def is_full(self):
        return self.bits == _bits.full_mask(self.arity)

    @property
    def is_empty(self):
        return self.bits == 0

    def __repr__(self):
        body = ",".join("".join(map(str, a)) for a in self)
        return f"Relation(k={self.k}, sorts={list(self.sorts)}, {{{body}}})"


def make_relation(k, sorts, tuples):
    sorts = tuple(sorts)
    n = len(sorts)
    b = 0
    for a in tuples:
        a = tuple(int(v) for v in a)
        if len(a) != n:
            raise ValueError(f"tuple {a} has length {len(a)}, expected {n}")
        if any(v not in (0, 1) for v in a):
            raise ValueError(f"tuple {a} is not over {{0,1}}")
        b |= 1 << _bits.index_of(a)
    return Relation(k, sorts, b)


def full(k, sorts):
    return Relation(k, tuple(sorts), _bits.full_mask(len(sorts)))


def empty(k, sorts):
    return Relation(k, tuple(sorts), 0)


def bottom(k):
    return Relation(k, (), 0)


def equality(k, sort):
    if sort is None or not 1 <= sort <= k:
        raise ValueError(f"equality needs a sort in 1..{k}")
    return Relation(k, (sort, sort), 0b1001)


def base_predicate(kind, k, sort=None):
    if kind == "bottom":
        return bottom(k)
    if kind == "equality":
        return equality(k, sort)
    raise ValueError(f"unknown base predicate {kind!r}")


def seeds(k):
    """The predicates every closure starts from."""
    return [bottom(k)] + [equality(k, i) for i in range(1, k + 1)]


def evaluate(rel, values):
    values = tuple(values)
    if len(values) != rel.arity:
        raise ValueError(f"assignment of length {len(values)} for arity {rel.arity}")
    return (rel.bits >> _bits.index_of(values)) & 1


def dummy_positions(rel):
    n = rel.arity
    return [i for i in range(n) if _bits.is_dummy(rel.bits, n, i)]


def drop_dummies(rel):
    """Remove every dummy variable; returns (relation, removed positions)."""
    removed = dummy_positions(rel)
    b, n = rel.bits, rel.arity
    for i in reversed(removed):
        b = _bits.cofactors(b, n, i)[0]
        n -= 1
    sorts = tuple(s for i, s in enumerate(rel.sorts) if i not in removed)
    return Relation(rel.k, sorts, b), removed


def insert_dummies(rel, positions, sorts):
    """Inverse of drop_dummies: positions ascending, in the coordinates of the result."""
    b, cur = rel.bits, list(rel.sorts)
    for pos, s in zip(positions, sorts):
        b = _bits.insert_dummy(b, len(cur), pos)
        cur.insert(pos, s)
    return Relation(rel.k, tuple(cur), b)


def permuted(rel, perm):
    """rho_pi(x_0..x_{n-1}) = rho(x_{pi(0)}, .., x_{pi(n-1)})."""
    perm = tuple(perm)
    n = rel.arity
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of 0..{n - 1}")
    sorts = [0] * n
    for i, p in enumerate(perm):
        sorts[p] = rel.sorts[i]
    return Relation(rel.k, tuple(sorts), _bits.permute(rel.bits, n, perm))


def is_similar(a, b):
    """A permutation pi with permuted(a, pi) == b, or None."""
    if a.k != b.k or a.arity != b.arity or len(a) != len(b):
        return None
    if sorted(a.sorts) != sorted(b.sorts):
        return None
    if canonical_key(a.sorts, a.bits) != canonical_key(b.sorts, b.bits):
        return None
    n = a.arity
    for perm in permutations(range(n)):
        if any(b.sorts[p] != a.sorts[i] for i, p in enumerate(perm)):
            continue
        if _bits.permute(a.bits, n, perm) == b.bits:
            return perm
    return None  # pragma: no cover - keys agreed


def _sorting_perm(sorts):
    # stable: position i goes to its rank among sorted sorts
    order = sorted(range(len(sorts)), key=lambda i: sorts[i])
    perm = [0] * len(sorts)
    for rank, i in enumerate(order):
        perm[i] = rank
    return tuple(perm)


@lru_cache(maxsize=1 << 20)
def canonical_key(sorts, bits):
    """Dedup key up to variable order: (sorted sorts, least bit vector).

    Dummy variables are kept; callers drop them first when they want the
    dummy-free key.
    """
    n = len(sorts)
    perm = _sorting_perm(sorts)
    b = _bits.permute(bits, n, perm)
    ss = tuple(sorted(sorts))
    value, _ = _bits.min_under_blocks(b, n, _bits.blocks_of(ss))
    return ss, value


def canonical(rel):
    """The dummy-free, sort-sorted, least representative of rel's similarity class."""
    core, _ = drop_dummies(rel)
    sorts, bits = canonical_key(core.sorts, core.bits)
    return Relation(rel.k, sorts, bits)
