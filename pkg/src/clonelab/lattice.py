"""Lattices of quantified relational clones and their constant-restricted relatives.

The 1-sorted lattice is built over a truncated pool of canonical relations:
kinds 1-6 plus kind 7 with at most ``trunc`` literals.  Closed subsets of the
pool are found with the bounded sPol/Inv closure (an over-approximation, so
every exclusion is certified) and every inclusion it claims is confirmed by an
elementary derivation.
"""
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import networkx as nx

from .canonical import (
    Downset,
    downset_insert,
    downset_leq,
    finite_part,
    kind7,
    materialize,
    mu,
)
from .closure import ClosureConfig, Verdict, engine, key_of, member
from .operations import (
    OpSet,
    KOperation,
    adjoin_constants,
    all_relations,
    compose_ops,
    pol_mask,
    projections,
    surjective_mask,
)


def _map(fn, items, cfg):
    items = list(items)
    workers = cfg.threads or os.cpu_count() or 1
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# -- fingerprints ----------------------------------------------------------------


@dataclass(frozen=True)
class Fingerprint:
    cr16: frozenset
    downset: Downset

    def __le__(self, other):
        return self.cr16 <= other.cr16 and downset_leq(self.downset, other.downset)

    def describe(self):
        return sorted(map(str, self.cr16)), [list(p) for p in self.downset]


def _fingerprint_of(members, k, trunc):
    ds = Downset(2 * k)
    for d in members:
        if d.kind == 7 and d.arity <= trunc:
            ds = downset_insert(ds, mu(d))
    return Fingerprint(frozenset(d for d in members if d.finite_part), ds)


def pool(k, trunc):
    """Kinds 1-6 plus kind 7 up to ``trunc`` literals, in enumeration order."""
    return finite_part(k) + sorted(kind7(k, trunc), key=lambda d: (d.arity, d.counts))


class GaloisPool:
    """Bounded sPol/Inv closure restricted to a finite pool of canonical relations."""

    def __init__(self, descriptors, pol_cap, k):
        self.items = list(descriptors)
        self.k = k
        self.m = pol_cap
        self.surj = surjective_mask(k, pol_cap)
        self.masks = [pol_mask(materialize(d), pol_cap) for d in self.items]
        self.index = {d: i for i, d in enumerate(self.items)}

    def spol(self, subset):
        acc = self.surj
        for i in _members(subset):
            acc &= self.masks[i]
        return acc

    def close(self, subset):
        ops = self.spol(subset)
        out = 0
        for i, m in enumerate(self.masks):
            if not ops & ~m:
                out |= 1 << i
        return out

    def closed_sets(self):
        """Every closed subset, as bitsets, by joining one element at a time."""
        start = self.close(0)
        seen = {start}
        todo = [start]
        while todo:
            cur = todo.pop()
            for i in range(len(self.items)):
                if not cur >> i & 1:
                    nxt = self.close(cur | 1 << i)
                    if nxt not in seen:
                        seen.add(nxt)
                        todo.append(nxt)
        return sorted(seen, key=lambda s: (bin(s).count("1"), _members(s)))

    def minimal_sources(self, target):
        """Inclusion-minimal subsets (without target) whose closure contains target."""
        n = len(self.items)
        others = [i for i in range(n) if i != target]
        tmask = self.masks[target]
        found = []

        def walk(pos, subset, ops):
            if not ops & ~tmask:
                if not any(f & subset == f for f in found):
                    found.append(subset)
                return
            for j in range(pos, len(others)):
                i = others[j]
                walk(j + 1, subset | 1 << i, ops & self.masks[i])

        walk(0, 0, self.surj)
        # walk visits supersets after subsets only along one branch
        return [f for f in found if not any(g != f and g & f == g for g in found)]

    def generators(self, subset):
        """A minimal generating subset, preferring higher-arity relations."""
        gens = subset
        for i in _members(subset):
            trial = gens & ~(1 << i)
            if self.close(trial) == self.close(subset):
                gens = trial
        return gens

    def descriptors(self, subset):
        return [self.items[i] for i in _members(subset)]


def _members(bitset):
    out = []
    i = 0
    while bitset:
        if bitset & 1:
            out.append(i)
        bitset >>= 1
        i += 1
    return out


def fingerprint(S, trunc=4, cfg=ClosureConfig(), k=None):
    """Fingerprint of the closed set of canonical relations S, kind 7 cut at ``trunc``.

    Closedness within the truncated pool is checked: exclusions by the bounded
    Galois closure, any claimed extra member by an elementary derivation.
    """
    S = set(S)
    ks = {d.k for d in S} | ({k} if k is not None else set())
    if len(ks) != 1:
        raise ValueError("descriptors over different k (or k unknown for an empty set)")
    k = ks.pop()
    items = pool(k, trunc)
    gp = GaloisPool(items, cfg.pol_cap, k)
    subset = sum(1 << gp.index[d] for d in S if d in gp.index)
    extra = gp.descriptors(gp.close(subset) & ~subset)
    if extra:
        rels = [materialize(d) for d in S]
        for d in extra:
            verdict = member(materialize(d), rels, cfg)
            if verdict is Verdict.IN:
                raise ValueError(f"not closed: {d} is generated")
            raise ValueError(f"closedness undecided: {d} may be generated")
    return _fingerprint_of(S, k, trunc)


# -- lattices --------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeNode:
    fingerprint: object
    label: str
    generators: tuple
    members: frozenset = frozenset()
    constants: frozenset = frozenset()
    flagged: bool = False


@dataclass
class Lattice:
    k: int
    trunc: int
    nodes: list
    edges: list
    unverified: list = field(default_factory=list)

    def bottom(self):
        return [i for i in range(len(self.nodes)) if not any(b == i for _, b in self.edges)]

    def top(self):
        return [i for i in range(len(self.nodes)) if not any(a == i for a, _ in self.edges)]

    def atoms(self):
        bottoms = self.bottom()
        return [b for a, b in self.edges if a in bottoms]

    def covers(self, i):
        return [b for a, b in self.edges if a == i]


def hasse(items, leq=lambda a, b: a <= b):
    """Cover relation (lower, upper) of the order ``leq`` on pairwise distinct items."""
    items = list(items)
    for i, a in enumerate(items):
        for b in items[i + 1:]:
            if a == b:
                raise ValueError("duplicate fingerprints")
    g = nx.DiGraph()
    g.add_nodes_from(range(len(items)))
    for i, a in enumerate(items):
        for j, b in enumerate(items):
            if i != j and leq(a, b):
                g.add_edge(i, j)
    if not nx.is_directed_acyclic_graph(g):
        raise ValueError("order relation has a cycle")
    return sorted(nx.transitive_reduction(g).edges())


def _label(gens, k):
    if not gens:
        return "x+y=0" if k == 1 else "x=y"
    return ", ".join(d.formula() for d in gens)


def build_fig1(trunc=4, cfg=ClosureConfig()):
    """All closed sets of 1-sorted canonical relations, kind 7 truncated at ``trunc``."""
    if trunc < 1:
        raise ValueError("trunc must be at least 1")
    k = 1
    gp = GaloisPool(pool(k, trunc), cfg.pol_cap, k)
    unverified = _confirm_inclusions(gp, cfg)
    nodes = []
    for subset in gp.closed_sets():
        members = frozenset(gp.descriptors(subset))
        gens = tuple(gp.descriptors(gp.generators(subset)))
        flagged = any(d.kind == 7 and d.arity == trunc for d in members)
        nodes.append(LatticeNode(_fingerprint_of(members, k, trunc), _label(gens, k), gens, members, flagged=flagged))
    edges = hasse([n.fingerprint for n in nodes])
    return Lattice(k, trunc, nodes, edges, unverified)


def _confirm_inclusions(gp, cfg):
    """Derive every inclusion the bounded closure claims; return the ones that failed."""
    jobs = []
    for t in range(len(gp.items)):
        for src in gp.minimal_sources(t):
            jobs.append((t, src))

    def prove(job):
        t, src = job
        rels = [materialize(d) for d in gp.descriptors(src)]
        target = materialize(gp.items[t])
        cap = cfg.cap_for(target.arity, *(r.arity for r in rels))
        eng = engine(rels, gp.k, cap=cap)
        with eng.lock:
            start = max([target.arity, eng.input_arity])
            for c in range(start, cap + 1):
                eng.grow(c)
                if eng.conjunction_contains(target):
                    return job, True
        return job, False

    failed = []
    for (t, src), ok in _map(prove, jobs, cfg):
        if not ok:
            names = ", ".join(map(str, gp.descriptors(src))) or "nothing"
            failed.append(f"{gp.items[t]} from {names}")
    return failed


# -- relational counterpart of Post's lattice -------------------------------------


@dataclass(frozen=True)
class PostFingerprint:
    small: frozenset
    pool: frozenset

    def __le__(self, other):
        return self.small <= other.small and self.pool <= other.pool


_CONSTANT_LABEL = {frozenset(): "", frozenset({0}): " ∩ Inv{0}", frozenset({1}): " ∩ Inv{1}",
                   frozenset({0, 1}): " ∩ Inv{0,1}"}


def _preserved_by(constants):
    return lambda rel: bool(adjoin_constants([rel], constants))


class _PostNodeData:
    """Membership of all small relations in one quantified clone, computed once."""

    def __init__(self, node, cfg, small_arity):
        self.node = node
        self.rels = [materialize(d) for d in node.generators]
        self.classes = {}
        for rel in all_relations(1, small_arity):
            self.classes.setdefault(key_of(rel), rel)
        self.inside = []
        self.undecided = []
        for key, rel in sorted(self.classes.items()):
            v = member(rel, self.rels, cfg)
            if v is Verdict.IN:
                self.inside.append((key, rel))
            elif v is Verdict.UNDECIDED:
                self.undecided.append(rel)


def derive_post(lat, cfg=ClosureConfig(), small_arity=3):
    """Restrict every node to the relations preserved by none, one or both constants.

    Nodes are deduplicated by the set of small relations (arity <= small_arity,
    up to similarity) and pool relations they contain.  For each node the
    conjunction claim is re-checked: every such relation is a conjunction of
    elementary-closure members that are themselves preserved by the constants.
    """
    if lat.k != 1:
        raise ValueError("the constant restriction is implemented for k = 1")
    bases = {}
    for node in lat.nodes:
        key = node.generators
        if key not in bases:
            bases[key] = node
    data = dict(zip(bases, _map(lambda n: _PostNodeData(n, cfg, small_arity), bases.values(), cfg)))
    out, seen, unverified = [], {}, list(lat.unverified)
    for node in lat.nodes:
        d = data[node.generators]
        for extra in ((), (0,), (1,), (0, 1)):
            consts = frozenset(node.constants | set(extra))
            keep = _preserved_by(consts)
            small = frozenset(key for key, rel in d.inside if keep(rel))
            pool_part = frozenset(m for m in node.members if keep(materialize(m)))
            fp = PostFingerprint(small, pool_part)
            if fp in seen:
                continue
            seen[fp] = len(out)
            base = node.label.split(" ∩ ")[0]
            out.append(LatticeNode(fp, base + _CONSTANT_LABEL[consts], node.generators, pool_part,
                                   consts, node.flagged))
        unverified += [f"undecided {r} for {node.label}" for r in d.undecided]
    edges = hasse([n.fingerprint for n in out])
    return Lattice(lat.k, lat.trunc, out, edges, unverified)


def conjunction_claim(node, cfg=ClosureConfig(), small_arity=3):
    """Every relation of a derived node is a conjunction of closure members preserved by its constants.

    Returns the relations for which no such conjunction was found.
    """
    keep = _preserved_by(node.constants)
    rels = [materialize(d) for d in node.generators]
    wanted = [materialize(d) for d in node.members]
    classes = {}
    for rel in all_relations(1, small_arity):
        classes.setdefault(key_of(rel), rel)
    wanted += [rel for key, rel in classes.items() if key in node.fingerprint.small]
    eng = engine(rels, 1)
    cap = cfg.cap_for(4, *(r.arity for r in rels))
    with eng.lock:
        eng.grow(cap)
        return [rel for rel in wanted if not eng.conjunction_contains(rel, keep=keep)]


# -- nu-decomposition of bounded k-clones ----------------------------------------


@dataclass(frozen=True)
class NuImage:
    """Surjective part plus, per (coordinate, constant), the slot (ops or None, flag)."""

    surjective: OpSet
    slots: tuple


def _drop_coord(f, i):
    return KOperation(f.k - 1, f.arity, f.tables[:i] + f.tables[i + 1:])


def slot(C, i, b):
    """The (k-1)-operations left after dropping coordinate i from members constant b there."""
    out = []
    for f in C:
        full = (1 << (1 << f.arity)) - 1
        if f.tables[i] == (full if b else 0):
            out.append(_drop_coord(f, i))
    return OpSet.from_ops(C.k - 1, out)


def nu_decompose(C, max_arity=None):
    """The image of a bounded k-clone (k >= 2) under the decomposition map.

    Each slot is (None, 0) when empty, (slot + projections, 0) when the slot has
    no projection, and (slot, 1) when it contains the projections.
    """
    if C.k < 2:
        raise ValueError("the decomposition needs k >= 2")
    top = max_arity or max(C.arities, default=1)
    proj = OpSet.from_ops(C.k - 1, projections(C.k - 1, top))
    slots = []
    for i, b in product(range(C.k), (0, 1)):
        s = slot(C, i, b)
        if not len(s):
            slots.append((None, 0))
        elif proj <= s:
            slots.append((s, 1))
        else:
            slots.append((s | proj, 0))
    return NuImage(C.surjective(), tuple(slots))


def closed_under_composition(ops, max_arity):
    """f(g1..gm) stays in ops for members f and same-arity members g."""
    by_arity = {}
    for f in ops:
        by_arity.setdefault(f.arity, []).append(f)
    for f in ops:
        for n, inner in by_arity.items():
            if n > max_arity:
                continue
            for gs in product(inner, repeat=f.arity):
                if compose_ops(f, gs) not in ops:
                    return False
    return True


def slot_trichotomy(C, i, b, max_arity):
    """The slot is empty, or closed under composition with projections all-or-nothing."""
    s = slot(C, i, b)
    if not len(s):
        return True
    proj = OpSet.from_ops(C.k - 1, projections(C.k - 1, max_arity))
    has_some = any(p in s for p in proj)
    if has_some and not proj <= s:
        return False
    if not closed_under_composition(s, max_arity):
        return False
    return closed_under_composition(s | proj, max_arity)


# -- output ------------------------------------------------------------------------


def _dot_escape(text):
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit(lat, fmt="dot"):
    """Serialize a lattice as DOT or JSON bytes (deterministic)."""
    if fmt == "dot":
        lines = ["digraph lattice {", "  rankdir=BT;"]
        for i, node in enumerate(lat.nodes):
            style = ", style=dashed" if node.flagged else ""
            lines.append(f'  n{i} [label="{_dot_escape(node.label)}"{style}];')
        for a, b in lat.edges:
            lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json":
        nodes = []
        for i, node in enumerate(lat.nodes):
            fp = node.fingerprint
            if isinstance(fp, Fingerprint):
                cr16, down = fp.describe()
            else:
                cr16 = sorted(str(d) for d in node.members if d.finite_part)
                down = [list(mu(d)) for d in sorted(node.members) if d.kind == 7]
            nodes.append({"id": i, "label": node.label, "cr16": cr16, "downset": down})
        doc = {"k": lat.k, "trunc": lat.trunc, "nodes": nodes, "edges": [list(e) for e in lat.edges]}
        return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")
