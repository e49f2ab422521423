"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (lines appear in the -v output) or directly:
``python tests/test_acceptance.py``.
"""
import random
import sys
import time
from functools import lru_cache
from itertools import product

import pytest

from clonelab.canonical import classify, single_generator_closure
from clonelab.closure import ClosureConfig, Verdict, key_of, member
from clonelab.elementary import compose_form, eo_compose, eo_forall, essential, forall_form
from clonelab.gf2 import LinearEquation, is_key, materialize as materialize_form, to_disjunctive_form
from clonelab.lattice import build_fig1, conjunction_claim, derive_post, nu_decompose, slot_trichotomy
from clonelab.operations import KOperation, all_relations, clo_generate
from clonelab.relation import Relation
from clonelab.verify import (
    downset_chains,
    fig1_structure,
    mu_reflects_order,
    suite_canonical,
    suite_galois,
    suite_lemmas,
)

FIG1_GOLDEN_NODES = 35  # build_fig1(4), frozen after checking the shape by hand


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _equations(n):
    return [LinearEquation(n, m, r) for m in range(1 << n) for r in (0, 1)]


def key_oracle(rel, eqs):
    covered = 0
    for e in eqs:
        sol = e.solutions()
        if sol & ~rel.bits == 0:
            covered |= sol
    return covered == rel.bits


def criterion_1():
    eqs = _equations(4)

    def run():
        return sum(is_key(r) != key_oracle(r, eqs) for r in (Relation(1, (1,) * 4, b) for b in range(1 << 16)))

    bad, secs = _timed(run)
    return bad == 0 and secs < 60, f"65536 relations, {bad} mismatches, {secs:.1f}s"


def criterion_2():
    def run():
        keys = [r for r in all_relations(1, 3) if r.arity and is_key(r)]
        forms = {id(r): to_disjunctive_form(r) for r in keys}
        bad = sum(materialize_form(forall_form(forms[id(r)])) != eo_forall(r) for r in keys)
        lead = [r for r in keys if 0 in essential(r)]
        pairs = 0
        for a, b in product(lead, repeat=2):
            pairs += 1
            if materialize_form(compose_form(forms[id(a)], forms[id(b)])) != eo_compose(a, b):
                bad += 1
        return len(keys), pairs, bad

    (n, pairs, bad), secs = _timed(run)
    return bad == 0 and secs < 60, f"{n} key relations, {pairs} compositions, {bad} mismatches, {secs:.1f}s"


def criterion_3():
    report, secs = _timed(lambda: suite_lemmas(2))
    failed = [c.name for c in report.checks if not c.ok]
    ok = report.ok and secs < 600
    return ok, f"{len(report.checks)} checks, failed {failed or 'none'}, {secs:.1f}s"


def criterion_4():
    report, secs = _timed(lambda: suite_canonical(2))
    checks = [c for c in report.checks if c.name.startswith("single-generator")]
    ok = bool(checks) and all(c.ok for c in checks)
    return ok, "; ".join(c.detail for c in checks) + f", {secs:.1f}s"


def criterion_5():
    cfg = ClosureConfig(arity_cap=6, pol_cap=4)

    def run():
        classes = {}
        for r in all_relations(1, 3):
            classes.setdefault(key_of(r), r)
        rels = [classes[k] for k in sorted(classes)]
        undecided, disagree, pairs = [], [], 0
        for lang in rels:
            d = classify(lang)
            table = single_generator_closure(d) if d is not None else None
            for target in rels:
                pairs += 1
                v = member(target, [lang], cfg)
                if v is Verdict.UNDECIDED:
                    undecided.append((lang, target))
                elif table is not None and is_key(target) and (v is Verdict.IN) != table(target):
                    disagree.append((lang, target))
        return pairs, undecided, disagree

    (pairs, undecided, disagree), secs = _timed(run)
    ok = not undecided and not disagree
    return ok, f"{pairs} pairs, {len(undecided)} undecided, {len(disagree)} table disagreements, {secs:.1f}s"


def criterion_6():
    report, secs = _timed(lambda: suite_galois(2, count=20, seed=0, arity=3))
    return report.ok, f"{report.checks[0].detail or '20 languages exact'}, {secs:.1f}s"


@lru_cache(maxsize=None)
def fig1():
    return _timed(lambda: build_fig1(4, ClosureConfig(arity_cap=6)))


def criterion_7():
    lat, secs = fig1()
    checks = fig1_structure(lat)
    failed = [c.name for c in checks if not c.ok]
    count_ok = len(lat.nodes) == FIG1_GOLDEN_NODES
    ok = not failed and count_ok and not lat.unverified and secs < 300
    detail = (f"{len(lat.nodes)} nodes (golden {FIG1_GOLDEN_NODES}), {len(lat.edges)} edges, "
              f"failed {failed or 'none'}, {len(lat.unverified)} unverified, {secs:.1f}s")
    return ok, detail


def criterion_8():
    lat, _ = fig1()

    def run():
        post = derive_post(lat)
        fps = [n.fingerprint for n in post.nodes]
        distinct = len(set(fps)) == len(fps)
        claim = [n.label for n in post.nodes if conjunction_claim(n)]
        again = derive_post(post)
        stable = {n.fingerprint for n in again.nodes} == set(fps)
        return post, distinct, claim, stable

    (post, distinct, claim, stable), secs = _timed(run)
    ok = distinct and not claim and stable and not post.unverified
    return ok, (f"{len(post.nodes)} nodes, distinct={distinct}, claim failures {len(claim)}, "
                f"idempotent={stable}, {len(post.unverified)} undecided, {secs:.1f}s")


def criterion_9():
    def run():
        parts = []
        ok = True
        for k in (1, 2):
            n, bad, open_ = mu_reflects_order(k)
            ok &= not bad and not open_
            parts.append(f"k={k}: {n} pairs, {len(bad)} wrong, {len(open_)} undecided")
        stuck = downset_chains(random.Random(0), dim=4, chains=1000)
        ok &= stuck == 0
        parts.append(f"1000 chains, {stuck} not stabilized")
        return ok, parts

    (ok, parts), secs = _timed(run)
    return ok, "; ".join(parts) + f", {secs:.1f}s"


def random_clones(rng, count, max_arity=2, tries=2000):
    seen = {}
    for _ in range(tries):
        if len(seen) == count:
            break
        gens = []
        for _ in range(rng.randint(1, 2)):
            m = rng.randint(1, 2)
            gens.append(KOperation.from_code(2, m, rng.getrandbits(2 << m)))
        C = clo_generate(gens, max_arity)
        seen.setdefault(C, gens)
    return list(seen)


def criterion_10():
    def run():
        clones = random_clones(random.Random(0), 50)
        images = {}
        for C in clones:
            images.setdefault(nu_decompose(C, 2), []).append(C)
        collisions = sum(len(v) - 1 for v in images.values())
        broken = sum(not slot_trichotomy(C, i, b, 2) for C in clones for i in range(2) for b in (0, 1))
        return len(clones), collisions, broken

    (n, collisions, broken), secs = _timed(run)
    ok = n == 50 and collisions == 0 and broken == 0
    return ok, f"{n} clones, {collisions} image collisions, {broken} inconsistent slots, {secs:.1f}s"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def line(i, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  criterion {i}  {detail}"


@pytest.mark.parametrize("i", range(1, 11))
def test_criterion(i, capsys):
    ok, detail = CRITERIA[i - 1]()
    with capsys.disabled():
        print("\n" + line(i, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        print(line(i, ok, detail), flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
