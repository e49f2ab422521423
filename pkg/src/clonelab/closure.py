"""Arity-capped closures under elementary operations and the membership sandwich.

The closure under dummies, permutations, identification, composition and
(optionally) universal quantification is kept as a set of representatives:
dummy-free relations with sorted sorts and the least bit vector among their
variable permutations.  Conjunctions are never materialized; membership in
the conjunction layer is decided per query.
"""
import enum
import threading
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

from . import _bits
from .operations import max_op_arity, pol_mask, pol_mask_slice, slice_partners, spol_bounded, surjective_mask
from .relation import Relation, canonical_key, seeds


@dataclass(frozen=True)
class ClosureConfig:
    """Working arity cap W (None: max input arity + 3), oracle arity cap M, worker count."""

    arity_cap: int = None
    pol_cap: int = 4
    threads: int = None

    def __post_init__(self):
        if self.arity_cap is not None and self.arity_cap < 0:
            raise ValueError("arity cap must be non-negative")
        if self.pol_cap < 1:
            raise ValueError("pol cap must be at least 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be at least 1")

    def cap_for(self, *arities):
        need = max(arities, default=0)
        if self.arity_cap is None:
            return need + 3
        if self.arity_cap < need:
            raise ValueError(f"arity cap {self.arity_cap} below input arity {need}")
        return self.arity_cap


class Verdict(enum.Enum):
    IN = "In"
    OUT = "Out"
    UNDECIDED = "Undecided"

    def __str__(self):
        return self.value


@lru_cache(maxsize=1 << 20)
def normal_key(sorts, bits):
    """Drop dummies, then canonicalize: the representative of a relation."""
    cur = list(sorts)
    for i in reversed(range(len(cur))):
        lo, hi = _bits.cofactors(bits, len(cur), i)
        if lo == hi:
            bits = lo
            del cur[i]
    return canonical_key(tuple(cur), bits)


def key_of(rel):
    return normal_key(rel.sorts, rel.bits)


@lru_cache(maxsize=1 << 18)
def _var_orbits(sorts, bits):
    """One variable per orbit of the automorphism group of a representative."""
    n = len(sorts)
    auts = [p for p in _bits.block_perms(_bits.blocks_of(sorts)) if _bits.permute(bits, n, p) == bits]
    reps, seen = [], set()
    for i in range(n):
        if i in seen:
            continue
        reps.append(i)
        seen.update(p[i] for p in auts)
    return tuple(reps)


@lru_cache(maxsize=1 << 18)
def _split(sorts, bits, i):
    lo, hi = _bits.cofactors(bits, len(sorts), i)
    return sorts[:i] + sorts[i + 1:], lo, hi


class Eo5Closure:
    """Incremental fixpoint of a generator set under the elementary operations.

    ``quantify`` enables universal quantification (qpp); without it the
    closure is the pp one.  ``grow(cap)`` raises the working arity cap and
    resumes the fixpoint, so results at every cap are exact least fixpoints.
    """

    def __init__(self, k, generators, quantify=True):
        self.k = k
        self.quantify = quantify
        self.lock = threading.RLock()
        self.cap = -1
        self.members = {}
        self.done = []
        self.pending = deque()
        self.generators = []
        for rel in list(seeds(k)) + list(generators):
            if rel.k != k:
                raise ValueError("generators over different k")
            key = key_of(rel)
            self.generators.append(key)
        self.input_arity = max((len(s) for s, _ in self.generators), default=0)

    def grow(self, cap):
        with self.lock:
            return self._grow(cap)

    def _grow(self, cap):
        if cap <= self.cap:
            return self
        if cap < self.input_arity:
            raise ValueError(f"arity cap {cap} below generator arity {self.input_arity}")
        old, self.cap = self.cap, cap
        if old < 0:
            for key in self.generators:
                self._add(key)
        else:
            for i, a in enumerate(self.done):
                for b in self.done[: i + 1]:
                    if old < len(a[0]) + len(b[0]) - 2 <= cap:
                        self._compose_all(a, b)
        while self.pending:
            self._process(self.pending.popleft())
        return self

    def _add(self, key):
        if key not in self.members:
            self.members[key] = len(self.members)
            self.pending.append(key)

    def _add_raw(self, sorts, bits):
        self._add(normal_key(sorts, bits))

    def _process(self, key):
        sorts, bits = key
        n = len(sorts)
        for i in range(n):
            for j in range(i + 1, n):
                if sorts[i] == sorts[j]:
                    self._add_raw(sorts[:j] + sorts[j + 1:], _bits.identify(bits, n, i, j))
            if self.quantify:
                self._add_raw(sorts[:i] + sorts[i + 1:], _bits.forall(bits, n, i))
        self.done.append(key)
        for other in self.done:
            if n + len(other[0]) - 2 <= self.cap:
                self._compose_all(key, other)

    def _compose_all(self, a, b):
        (sa, ba), (sb, bb) = a, b
        if not sa or not sb:
            return
        na, nb = len(sa) - 1, len(sb) - 1
        for i in _var_orbits(sa, ba):
            ra, a0, a1 = _split(sa, ba, i)
            for j in _var_orbits(sb, bb):
                if sa[i] != sb[j]:
                    continue
                rb, b0, b1 = _split(sb, bb, j)
                bits = _bits.outer(a0, na, b0, nb) | _bits.outer(a1, na, b1, nb)
                self._add_raw(ra + rb, bits)

    # -- queries -------------------------------------------------------------

    def relations(self):
        return [Relation(self.k, s, b) for s, b in self.members]

    def __contains__(self, rel):
        return key_of(rel) in self.members

    def conjunction_contains(self, rel, keep=None):
        """Is rel a conjunction of (padded, permuted) members of the same arity?

        ``keep`` optionally restricts the conjuncts to members it accepts.
        """
        target = rel.bits
        n = rel.arity
        acc = _bits.full_mask(n)
        if acc == target:
            return True
        for (sorts, bits) in self.members:
            if len(sorts) > n or (keep is not None and not keep(Relation(self.k, sorts, bits))):
                continue
            for phi in _placements(sorts, rel.sorts):
                src = _embedding(n, phi)
                if all((bits >> src[t]) & 1 for t in _bits.iter_bits(target)):
                    acc &= _embed_bits(bits, src)
                    if acc == target:
                        return True
        return acc == target

    def supersets(self, rel):
        """Placed members of rel's arity containing rel."""
        out = []
        for (sorts, bits) in self.members:
            if len(sorts) > rel.arity:
                continue
            for phi in _placements(sorts, rel.sorts):
                src = _embedding(rel.arity, phi)
                if all((bits >> src[t]) & 1 for t in _bits.iter_bits(rel.bits)):
                    out.append(Relation(self.k, rel.sorts, _embed_bits(bits, src)))
        return out


@lru_cache(maxsize=1 << 16)
def _placements(inner, outer):
    """Injective, sort-respecting maps from inner's variables to outer's."""
    out = []
    for phi in permutations(range(len(outer)), len(inner)):
        if all(outer[p] == s for p, s in zip(phi, inner)):
            out.append(phi)
    return tuple(out)


@lru_cache(maxsize=1 << 16)
def _embedding(n, phi):
    """For each outer tuple t, the inner tuple index read through phi."""
    src = []
    for t in range(1 << n):
        s = 0
        for p in phi:
            s = (s << 1) | ((t >> (n - 1 - p)) & 1)
        src.append(s)
    return tuple(src)


def _embed_bits(bits, src):
    out = 0
    for t, s in enumerate(src):
        if (bits >> s) & 1:
            out |= 1 << t
    return out


# -- public API ----------------------------------------------------------------

_ENGINES = {}
_ENGINES_LOCK = threading.Lock()


def engine(S, k=None, quantify=True, cap=None):
    """A shared, growable closure engine for the language S.

    A cached engine is reused only if it has not grown past ``cap``.
    """
    S = list(S)
    k = _language_k(S, k)
    ident = (k, frozenset(key_of(r) for r in S), quantify)
    with _ENGINES_LOCK:
        eng = _ENGINES.get(ident)
        if eng is None or (cap is not None and eng.cap > cap):
            if len(_ENGINES) > 4096:
                _ENGINES.clear()
            eng = _ENGINES[ident] = Eo5Closure(k, S, quantify)
        return eng


def _language_k(S, k):
    ks = {r.k for r in S}
    if k is not None:
        ks.add(k)
    if len(ks) != 1:
        raise ValueError("relations over different k (or k unknown for an empty set)")
    return ks.pop()


def eo5_closure(S, cfg=ClosureConfig(), k=None):
    """Representatives of the eo1-eo5 closure of S within the arity cap."""
    S = list(S)
    cap = cfg.cap_for(*(r.arity for r in S))
    return engine(S, k, cap=cap).grow(cap).relations()


class ConjunctionClosure:
    """The conjunction layer over a fixed elementary closure (queried, not listed)."""

    def __init__(self, eng):
        self.engine = eng
        self.k = eng.k
        self.cap = eng.cap

    def __contains__(self, rel):
        if rel.arity > self.cap:
            return False
        return self.engine.conjunction_contains(rel)

    def relations(self, sorts):
        """Every member with the given sort vector (small arities only)."""
        sorts = tuple(sorts)
        n = len(sorts)
        if n > 4:
            raise ValueError("explicit listing is limited to arity 4")
        gens = {_bits.full_mask(n)}
        for (s, b) in self.engine.members:
            if len(s) <= n:
                for phi in _placements(s, sorts):
                    gens.add(_embed_bits(b, _embedding(n, phi)))
        found = set(gens)
        frontier = list(gens)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = x & g
                    if y not in found:
                        found.add(y)
                        nxt.append(y)
            frontier = nxt
        return [Relation(self.k, sorts, b) for b in sorted(found)]


def qpp_closure(S, cfg=ClosureConfig(), k=None):
    S = list(S)
    cap = cfg.cap_for(*(r.arity for r in S))
    return ConjunctionClosure(engine(S, k, cap=cap).grow(cap))


def pp_closure(S, cfg=ClosureConfig(), k=None):
    S = list(S)
    cap = cfg.cap_for(*(r.arity for r in S))
    return ConjunctionClosure(engine(S, k, quantify=False, cap=cap).grow(cap))


def separating_operation_exists(rel, S, m, k=None):
    """Some surjective arity-m operation preserves all of S but not rel.

    When full arity-m tables exceed the budget, all arities that fit are
    searched, then operations at arity m with a single free coordinate and a
    fixed table (a projection or a symmetric function) at the others.
    """
    k = rel.k if k is None else k
    return _full_separates(rel, S, m, k) or _slice_separates(rel, S, m, k)


def _full_separates(rel, S, m, k):
    m = min(m, max_op_arity(k))
    if m < 1:
        return False
    spol = spol_bounded(S, m, k=k).masks.get(m, 0)
    return bool(spol & ~pol_mask(rel, m))


def _slice_separates(rel, S, m, k):
    if k < 2 or m <= max_op_arity(k) or m > max_op_arity(1):
        return False
    for sort in sorted(set(rel.sorts)):
        for fixed in slice_partners(m):
            acc = surjective_mask(1, m)
            for r in S:
                acc &= pol_mask_slice(r, m, sort, fixed)
                if not acc:
                    break
            if acc & ~pol_mask_slice(rel, m, sort, fixed):
                return True
    return False


def member(rel, S, cfg=ClosureConfig(), quantify=True):
    """Sandwich decision for rel in qpp<S> (pp<S> when quantify is False).

    Out is certified by a bounded surjective polymorphism and only used for
    qpp; In by an elementary derivation found with caps growing up to W.
    Past the table budget, arity-M operations are searched one coordinate at
    a time, after the derivation search has failed.
    """
    S = list(S)
    k = _language_k(S, rel.k)
    top = cfg.cap_for(rel.arity, *(r.arity for r in S))
    if rel.arity > top:
        raise ValueError(f"target arity {rel.arity} exceeds cap {top}")
    if quantify and _full_separates(rel, S, cfg.pol_cap, k):
        return Verdict.OUT
    eng = engine(S, k, quantify, cap=top)
    start = max([rel.arity, eng.input_arity] + [r.arity for r in S])
    with eng.lock:
        for cap in range(start, top + 1):
            eng.grow(cap)
            if eng.conjunction_contains(rel):
                return Verdict.IN
    if quantify and _slice_separates(rel, S, cfg.pol_cap, k):
        return Verdict.OUT
    return Verdict.UNDECIDED


def is_closed_canonical(S, cfg=ClosureConfig(), k=None):
    """Does the set of canonical descriptors S describe a quantified relational clone?

    Checks, within the arity cap, that the canonical relations of the
    elementary closure are exactly S and that no kind 1-6 relation outside S
    is the conjunction of its supersets in that closure.
    """
    from .canonical import classify, finite_part, materialize

    S = set(S)
    ks = {d.k for d in S} | ({k} if k is not None else set())
    if len(ks) != 1:
        raise ValueError("descriptors over different k (or k unknown for an empty set)")
    k = ks.pop()
    rels = [materialize(d) for d in S]
    cap = cfg.cap_for(4, *(r.arity for r in rels))
    if cap < 4:
        raise ValueError("closedness needs an arity cap of at least 4")
    eng = engine(rels, k, cap=cap).grow(cap)
    found = {classify(r) for r in eng.relations()} - {None}
    if found != S:
        return False
    for d in finite_part(k):
        if d not in S and eng.conjunction_contains(materialize(d)):
            return False
    return True
