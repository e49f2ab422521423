"""Machine checks shared by ``clonelab verify`` and the acceptance tests.

Each suite returns a Report: a list of named checks with a pass flag and a
short detail string.
"""
import random
from dataclasses import dataclass, field
from itertools import product

from .canonical import (
    Downset,
    downset_leq,
    classify,
    downset_insert,
    enumerate_CR,
    is_trivial,
    kind7,
    materialize,
    mu,
    single_generator_closure,
)
from .closure import ClosureConfig, Verdict, key_of, member, qpp_closure
from .gf2 import LinearEquation, gauss_rearrangement, is_key, rearrangement_round_trip
from .gf2 import DisjunctiveForm, materialize as materialize_form
from .operations import all_relations, inv_bounded, spol_bounded
from .relation import Relation


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self):
        tail = f"  ({self.detail})" if self.detail else ""
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}{tail}"


@dataclass
class Report:
    checks: list = field(default_factory=list)

    def add(self, name, ok, detail=""):
        self.checks.append(Check(name, bool(ok), detail))

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]


def _clause(n, vars_, rhs):
    mask = 0
    for v in vars_:
        mask |= 1 << (n - 1 - v)
    return LinearEquation(n, mask, rhs)


def disjunction(k, sorts, clauses):
    """Relation of a disjunction given as [(variables, rhs), ...]."""
    n = len(sorts)
    df = DisjunctiveForm(k, tuple(sorts), tuple(_clause(n, v, r) for v, r in clauses))
    return materialize_form(df)


def key_representatives(k, max_arity):
    """One relation per similarity class of key relations up to max_arity (dummies kept)."""
    seen = {}
    for rel in all_relations(k, max_arity):
        if rel.arity and is_key(rel):
            seen.setdefault((rel.sorts and tuple(sorted(rel.sorts)), key_of(rel), rel.arity), rel)
    return list(seen.values())


# -- lemma instances ---------------------------------------------------------------


@dataclass
class LemmaInstance:
    lemma: str
    left: list
    right: list
    pp_inside: list = field(default_factory=list)  # relations required in pp<left>

    def __str__(self):
        return f"{self.lemma}: {self.left[0]!r}"


def _decomposition(rel):
    """sigma and the lambdas of the decomposition of a rearranged key relation."""
    gf = gauss_rearrangement(rel)
    k = rel.k
    m, n = len(gf.x_sorts), len(gf.y_sorts)
    rho = gf.relation()
    sig_sorts = gf.x_sorts + gf.x_sorts + gf.z_sorts
    sig = [((i, m + i), 0) for i in range(m)] + [((2 * m + h,), c) for h, c in enumerate(gf.c)]
    sigma = disjunction(k, sig_sorts, sig)
    lambdas = []
    for i in range(m):
        # x_i + sum a_ij y_j = b_i, as a single equation (not a disjunction)
        vars_ = (0,) + tuple(1 + j for j in range(n) if gf.a[i][j])
        eq = _clause(1 + n, vars_, gf.b[i])
        lambdas.append(Relation(k, (gf.x_sorts[i],) + gf.y_sorts, eq.solutions()))
    return rho, sigma, lambdas


def instances_decomposition(k, max_arity=4):
    out, skipped = [], 0
    for rel in key_representatives(k, max_arity):
        if rel.is_full:
            continue
        rho, sigma, lambdas = _decomposition(rel)
        if max([sigma.arity] + [r.arity for r in lambdas]) > max_arity:
            skipped += 1
            continue
        out.append(LemmaInstance("decomposition", [rho], [sigma] + lambdas, [sigma]))
    return out, skipped


def _sum_relation(k, sorts, b):
    n = len(sorts)
    return Relation(k, tuple(sorts), LinearEquation(n, (1 << n) - 1, b).solutions())


def _diff_eq(k, i, j):
    return _sum_relation(k, (i, i, j, j), 0)


def instances_parity(k, max_arity=4):
    out = []
    for counts in product(range(max_arity + 1), repeat=k):
        if not 3 <= sum(counts) <= max_arity:
            continue
        sorts = tuple(s + 1 for s in range(k) for _ in range(counts[s]))
        used = [s + 1 for s in range(k) if counts[s]]
        odd = [s + 1 for s in range(k) if counts[s] % 2]
        for b in (0, 1):
            rho = _sum_relation(k, sorts, b)
            right = [_diff_eq(k, i, j) for i in used for j in used if i <= j]
            if not odd and b:
                right += [_sum_relation(k, (i, i), 1) for i in used]
            elif odd:
                right.append(_sum_relation(k, tuple(odd), b))
            out.append(LemmaInstance("parity", [rho], right))
    return out


def instances_split_constant(k, max_arity=4):
    """Equalities plus constant literals: split off the first constant."""
    out = []
    for m in range(1, max_arity // 2 + 1):
        for l in range(1, max_arity - 2 * m + 1):
            for ps in product(range(1, k + 1), repeat=m):
                for rs in product(range(1, k + 1), repeat=l):
                    for cs in product((0, 1), repeat=l):
                        sorts = tuple(p for p in ps for _ in (0, 1)) + rs
                        eqs = [((2 * i, 2 * i + 1), 0) for i in range(m)]
                        lits = [((2 * m + h,), c) for h, c in enumerate(cs)]
                        rho = disjunction(k, sorts, eqs + lits)
                        rest = disjunction(k, sorts[: 2 * m] + rs[1:], eqs + [((2 * m + h,), c) for h, c in enumerate(cs[1:])])
                        pair = disjunction(k, (ps[0], ps[0], rs[0]), [((0, 1), 0), ((2,), cs[0])])
                        out.append(LemmaInstance("split-constant", [rho], [rest, pair]))
    return out


def instances_split_equalities(k, max_arity=4):
    out = []
    for m in range(2, max_arity // 2 + 1):
        for ps in product(range(1, k + 1), repeat=m):
            sorts = tuple(p for p in ps for _ in (0, 1))
            eqs = [((2 * i, 2 * i + 1), 0) for i in range(m)]
            rho = disjunction(k, sorts, eqs)
            rest = disjunction(k, sorts[2:], [((2 * i, 2 * i + 1), 0) for i in range(m - 1)])
            pair = disjunction(k, sorts[:4], eqs[:2])
            out.append(LemmaInstance("split-equalities", [rho], [rest, pair]))
    for i in range(1, k + 1):
        four = disjunction(k, (i,) * 4, [((0, 1), 0), ((2, 3), 0)])
        chain = disjunction(k, (i,) * 3, [((0, 1), 0), ((1, 2), 0)])
        out.append(LemmaInstance("equality-chain", [four], [chain]))
    return out


def instances_split_implication(k, max_arity=4):
    """x=0 or y=1 plus constant literals: split off the first literal."""
    out = []
    for i in range(1, k + 1):
        for l in range(1, max_arity - 1):
            for rs in product(range(1, k + 1), repeat=l):
                for cs in product((0, 1), repeat=l):
                    head = [((0,), 0), ((1,), 1)]
                    rho = disjunction(k, (i, i) + rs, head + [((2 + h,), c) for h, c in enumerate(cs)])
                    rest = disjunction(k, (i, i) + rs[1:], head + [((2 + h,), c) for h, c in enumerate(cs[1:])])
                    pair = disjunction(k, (i, i, rs[0]), head + [((2,), cs[0])])
                    out.append(LemmaInstance("split-implication", [rho], [rest, pair]))
    return out


def instances_implication_literal(k):
    out = []
    for i, j, b in product(range(1, k + 1), range(1, k + 1), (0, 1)):
        rho = disjunction(k, (i, i, j), [((0,), 0), ((1,), 1), ((2,), b)])
        eq_lit = disjunction(k, (i, i, j), [((0, 1), 0), ((2,), b)])
        impl = disjunction(k, (i, i), [((0,), 0), ((1,), 1)])
        out.append(LemmaInstance("implication-literal", [rho], [eq_lit, impl]))
    return out


def lemma_instances(k, max_arity=4):
    """Every instance of the six decomposition lemmas with relations up to max_arity."""
    dec, skipped = instances_decomposition(k, max_arity)
    out = dec + instances_parity(k, max_arity) + instances_split_constant(k, max_arity)
    out += instances_split_equalities(k, max_arity) + instances_split_implication(k, max_arity)
    out += instances_implication_literal(k)
    return out, skipped


def check_instance(inst, cfg=ClosureConfig()):
    """Failures (as strings) of the mutual generation of both sides."""
    bad = []
    for side, other in ((inst.left, inst.right), (inst.right, inst.left)):
        for rel in side:
            v = member(rel, other, cfg)
            if v is not Verdict.IN:
                bad.append(f"{rel!r} is {v} in the closure of the other side")
    for rel in inst.pp_inside:
        v = member(rel, inst.left, cfg, quantify=False)
        if v is not Verdict.IN:
            bad.append(f"{rel!r} not derived without quantifiers")
    return bad


def suite_lemmas(k=2, cfg=ClosureConfig(), max_arity=4):
    report = Report()
    for kk in range(1, k + 1):
        reps = [r for r in key_representatives(kk, max_arity) if not r.is_full]
        bad = [r for r in reps if not rearrangement_round_trip(r)]
        report.add(f"rearrangement round trip k={kk}", not bad, f"{len(reps)} key relations, {len(bad)} failures")
        insts, skipped = lemma_instances(kk, max_arity)
        by_lemma = {}
        for inst in insts:
            by_lemma.setdefault(inst.lemma, []).append(inst)
        for name, group in by_lemma.items():
            fails = []
            for inst in group:
                fails += [f"{inst}: {b}" for b in check_instance(inst, cfg)]
            detail = f"{len(group)} instances"
            if name == "decomposition" and skipped:
                detail += f", {skipped} skipped above arity {max_arity}"
            if fails:
                detail += f"; first failure: {fails[0]}"
            report.add(f"{name} k={kk}", not fails, detail)
    return report


# -- Galois laws -------------------------------------------------------------------


def random_language(rng, k, max_arity=3, size=None):
    size = size or rng.randint(1, 3)
    out = []
    for _ in range(size):
        n = rng.randint(1, max_arity)
        sorts = tuple(rng.randint(1, k) for _ in range(n))
        out.append(Relation(k, sorts, rng.randrange(1 << (1 << n))))
    return out


def galois_laws(S, T, k, arity=3):
    """Failures of the bounded Galois laws for languages S and T (S extended by T)."""
    bad = []
    pol = spol_bounded(S, arity, k=k)
    inv = {(r.sorts, r.bits) for r in inv_bounded(pol, arity)}
    if not all((r.sorts, r.bits) in inv for r in S):
        bad.append("S not inside Inv sPol S")
    bigger = list(S) + list(T)
    pol_big = spol_bounded(bigger, arity, k=k)
    if not pol_big <= pol:
        bad.append("sPol not antitone")
    inv_big = {(r.sorts, r.bits) for r in inv_bounded(pol_big, arity)}
    if not inv <= inv_big:
        bad.append("Inv not antitone")
    again = spol_bounded(inv_bounded(pol, arity), arity, k=k)
    if again != pol:
        bad.append("sPol Inv sPol differs from sPol")
    return bad


def suite_galois(k=2, count=20, seed=0, arity=3):
    report = Report()
    rng = random.Random(seed)
    fails = []
    for t in range(count):
        kk = rng.randint(1, k)
        S = random_language(rng, kk, arity)
        T = random_language(rng, kk, arity, size=1)
        fails += [f"language {t}: {b}" for b in galois_laws(S, T, kk, arity)]
    report.add(f"Galois laws on {count} random languages (k<={k}, arity<={arity})", not fails,
               fails[0] if fails else "")
    return report


# -- canonical relations -----------------------------------------------------------


def table_conformance(d, targets, cfg):
    """Targets on which the single-generator description and the bounded closure disagree."""
    closure = qpp_closure([materialize(d)], cfg)
    pred = single_generator_closure(d)
    return [t for t in targets if (t in closure) != pred(t)]


def lower_arity_generators(k, max_arity=4, cfg=ClosureConfig()):
    """A canonical relation is never regained from a lower-arity relation of its own closure.

    Candidates are the nontrivial key relations the single-generator description accepts.
    Returns (pairs checked, pairs found In, pairs left Undecided).
    """
    reps = [r for r in key_representatives(k, max_arity - 1) if not is_trivial(r)]
    checked, back, open_ = 0, [], []
    for d in enumerate_CR(k, max_arity):
        pred, rho = single_generator_closure(d), materialize(d)
        for sigma in reps:
            if sigma.arity >= d.arity or not pred(sigma):
                continue
            checked += 1
            v = member(rho, [sigma], cfg)
            if v is Verdict.IN:
                back.append((d, sigma))
            elif v is Verdict.UNDECIDED:
                open_.append((d, sigma))
    return checked, back, open_


def mu_reflects_order(k, bound=4, max_arity=4, cfg=ClosureConfig(arity_cap=7)):
    """mu(a) <= mu(b) iff a lies in the closure of b, for kind-7 pairs with counts <= bound.

    Membership is decided by the sandwich, so pairs are limited to max_arity.
    Returns (number of pairs, disagreements, undecided pairs).
    """
    ds = [d for d in kind7(k, max_arity) if max(d.counts) <= bound]
    bad, open_ = [], []
    for a, b in product(ds, repeat=2):
        leq = all(x <= y for x, y in zip(mu(a), mu(b)))
        v = member(materialize(a), [materialize(b)], cfg)
        if v is Verdict.UNDECIDED:
            open_.append((a, b))
        elif leq != (v is Verdict.IN):
            bad.append((a, b))
    return len(ds) ** 2, bad, open_


def downset_chains(rng, dim=4, chains=1000, pool_size=12, span=8):
    """Random insertion chains over finite point pools; returns how many failed to stabilize.

    A chain stabilizes when it grows strictly at most pool_size times and its
    final downset absorbs every pool point.
    """
    failures = 0
    for _ in range(chains):
        pool = [tuple(rng.randint(0, span) for _ in range(dim)) for _ in range(pool_size)]
        ds, strict = Downset(dim), 0
        for _ in range(pool_size * 5):
            nxt = downset_insert(ds, rng.choice(pool))
            if nxt != ds:
                if not downset_leq(ds, nxt):
                    failures += 1
                    break
                strict += 1
            ds = nxt
        else:
            for p in pool:
                ds = downset_insert(ds, p)
            if strict > pool_size or any(downset_insert(ds, p) != ds for p in pool):
                failures += 1
    return failures


def suite_canonical(k=2, cfg=ClosureConfig(arity_cap=6), max_arity=3):
    report = Report()
    for kk in range(1, k + 1):
        ds = enumerate_CR(kk, 4)
        bad = [d for d in ds if classify(materialize(d)) != d]
        report.add(f"classify inverts materialize k={kk}", not bad, f"{len(ds)} descriptors")
        targets = key_representatives(kk, max_arity)
        fails = []
        gens = [d for d in enumerate_CR(kk, max_arity)]
        for d in gens:
            mism = table_conformance(d, targets, cfg)
            if mism:
                fails.append(f"{d}: {len(mism)} mismatches, e.g. {mism[0]!r}")
        report.add(f"single-generator descriptions k={kk}", not fails,
                   f"{len(gens)} generators x {len(targets)} targets" + (f"; {fails[0]}" if fails else ""))
        n, back, open_ = lower_arity_generators(kk)
        report.add(f"no lower-arity generator k={kk}", not back and not open_,
                   f"{n} pairs, {len(back)} regained, {len(open_)} undecided")
    return report


def suite_fig1(cfg=ClosureConfig(arity_cap=6), trunc=4, golden=None):
    from .lattice import build_fig1

    report = Report()
    lat = build_fig1(trunc, cfg)
    report.add("every claimed inclusion derived", not lat.unverified,
               lat.unverified[0] if lat.unverified else f"{len(lat.nodes)} nodes")
    for check in fig1_structure(lat):
        report.checks.append(check)
    if golden is not None:
        report.add("node count", len(lat.nodes) == golden, f"{len(lat.nodes)} (expected {golden})")
    return report


FIG1_ATOMS = ("c7(1,0)", "c7(0,1)", "c4(1)", "c5(1,1)")


def fig1_structure(lat):
    out = []
    bottoms, tops = lat.bottom(), lat.top()
    out.append(Check("unique bottom and top", len(bottoms) == 1 and len(tops) == 1,
                     f"{len(bottoms)} minimal, {len(tops)} maximal"))
    if len(bottoms) == 1:
        bottom = lat.nodes[bottoms[0]]
        out.append(Check("bottom is the trivial clone", not bottom.members, bottom.label))
    atoms = sorted(str(d) for a in lat.atoms() for d in lat.nodes[a].generators)
    out.append(Check("four atoms: x=0, x=1, x+y=1, x+y=u+v", atoms == sorted(FIG1_ATOMS) and len(lat.atoms()) == 4,
                     ", ".join(atoms)))
    if len(tops) == 1:
        top = lat.nodes[tops[0]]
        full = len([d for d in top.members]) == len(_pool_of(lat))
        out.append(Check("top contains every pool relation", full, top.label))
    out.append(Check("both chains present with nested closures", _chains_ok(lat), f"length {lat.trunc}"))
    return out


def _pool_of(lat):
    from .lattice import pool
    return pool(lat.k, lat.trunc)


def _chains_ok(lat):
    from .canonical import CanonicalDescriptor
    index = {n.members: i for i, n in enumerate(lat.nodes)}
    for slot in (0, 1):
        prev = None
        for n in range(1, lat.trunc + 1):
            counts = (n, 0) if slot == 0 else (0, n)
            d = CanonicalDescriptor(7, 1, counts=counts)
            node = [x for x in lat.nodes if x.generators == (d,)]
            if not node:
                return False
            members = node[0].members
            # the chain element generates exactly the shorter ones of its polarity
            want = {CanonicalDescriptor(7, 1, counts=(j, 0) if slot == 0 else (0, j)) for j in range(1, n + 1)}
            if set(members) != want:
                return False
            if prev is not None and not prev < members:
                return False
            prev = members
    return bool(index)


SUITES = ("lemmas", "galois", "canonical", "fig1")


def run_suite(name, k=2, cfg=ClosureConfig()):
    if name == "lemmas":
        return suite_lemmas(k, cfg)
    if name == "galois":
        return suite_galois(k)
    if name == "canonical":
        return suite_canonical(k, ClosureConfig(arity_cap=cfg.arity_cap or 6, pol_cap=cfg.pol_cap, threads=cfg.threads))
    if name == "fig1":
        return suite_fig1(ClosureConfig(arity_cap=cfg.arity_cap or 6, pol_cap=cfg.pol_cap, threads=cfg.threads))
    raise ValueError(f"unknown suite {name!r}")
