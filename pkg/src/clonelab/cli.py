"""Command-line front end.

Relation files hold one or more literals:

    rel k=1 sorts=[1,1] {01,10}
    disj k=2 sorts=[1,2] : x1=0 | x2=1

``#`` starts a comment.  Bitstring character i is variable i; ``x<i>`` is
1-based.  ``{}`` is the empty relation.
"""
import argparse
import re
import sys
from pathlib import Path

from .canonical import classify
from .closure import ClosureConfig, engine, member
from .gf2 import DisjunctiveForm, LinearEquation, format_equation, materialize, to_disjunctive_form
from .operations import BudgetError, inv_bounded, pol_bounded
from .relation import Relation


class ParseError(ValueError):
    def __init__(self, msg, text, pos):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.column = line, col


_TOKEN = re.compile(r"(?:(?P<word>[A-Za-z_][A-Za-z_0-9]*)|(?P<num>\d+)|(?P<sym>[=\[\]{},:|+]))")


class _Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self._skip()

    def _skip(self):
        m = re.compile(r"(?:\s+|#[^\n]*)*").match(self.text, self.pos)
        self.pos = m.end()

    def at_end(self):
        return self.pos >= len(self.text)

    def peek(self):
        m = _TOKEN.match(self.text, self.pos)
        if not m or m.start(m.lastgroup) != self.pos:
            return None
        return m.group(m.lastgroup)

    def next(self, what="token"):
        m = _TOKEN.match(self.text, self.pos)
        if not m or m.start(m.lastgroup) != self.pos:
            self.fail(f"expected {what}")
        self.pos = m.end()
        start = m.start(m.lastgroup)
        self._skip()
        return m.group(m.lastgroup), start

    def expect(self, tok):
        got, start = self.next(repr(tok))
        if got != tok:
            self.fail(f"expected {tok!r}, found {got!r}", start)
        return start

    def number(self, what="integer"):
        got, start = self.next(what)
        if not got.isdigit():
            self.fail(f"expected {what}, found {got!r}", start)
        return int(got), start

    def fail(self, msg, pos=None):
        raise ParseError(msg, self.text, self.pos if pos is None else pos)


def _header(lx):
    lx.expect("k")
    lx.expect("=")
    k, at = lx.number("k")
    if k < 1:
        lx.fail("k must be positive", at)
    lx.expect("sorts")
    lx.expect("=")
    lx.expect("[")
    sorts = []
    if lx.peek() != "]":
        while True:
            s, at = lx.number("sort")
            if not 1 <= s <= k:
                lx.fail(f"sort {s} outside 1..{k}", at)
            sorts.append(s)
            if lx.peek() != ",":
                break
            lx.next()
    lx.expect("]")
    return k, tuple(sorts)


def _rel_body(lx, k, sorts):
    n = len(sorts)
    lx.expect("{")
    bits = 0
    if lx.peek() != "}":
        while True:
            word, at = lx.next("bitstring")
            if not word.isdigit() or set(word) - {"0", "1"}:
                lx.fail(f"bad tuple {word!r}", at)
            if len(word) != n:
                lx.fail(f"tuple {word} has length {len(word)}, expected {n}", at)
            bits |= 1 << int(word, 2)
            if lx.peek() != ",":
                break
            lx.next()
    lx.expect("}")
    return Relation(k, sorts, bits)


def _term(lx, n):
    word, at = lx.next("term")
    if word in ("0", "1"):
        return 0, int(word)
    m = re.fullmatch(r"x(\d+)", word)
    if not m:
        lx.fail(f"bad term {word!r}", at)
    i = int(m.group(1))
    if not 1 <= i <= n:
        lx.fail(f"variable x{i} outside x1..x{n}", at)
    return 1 << (n - i), 0


def _disj_body(lx, k, sorts):
    n = len(sorts)
    lx.expect(":")
    clauses = []
    while True:
        mask, const = _term(lx, n)
        while lx.peek() == "+":
            lx.next()
            m2, c2 = _term(lx, n)
            mask ^= m2
            const ^= c2
        lx.expect("=")
        rhs, at = lx.number("bit")
        if rhs not in (0, 1):
            lx.fail("right-hand side must be 0 or 1", at)
        clauses.append(LinearEquation(n, mask, rhs ^ const))
        if lx.peek() != "|":
            break
        lx.next()
    return DisjunctiveForm(k, sorts, tuple(clauses))


def parse_relations(text):
    """Every literal in text, as Relation (rel) or DisjunctiveForm (disj)."""
    lx = _Lexer(text)
    out = []
    while not lx.at_end():
        word, at = lx.next("'rel' or 'disj'")
        if word not in ("rel", "disj"):
            lx.fail(f"expected 'rel' or 'disj', found {word!r}", at)
        k, sorts = _header(lx)
        out.append(_rel_body(lx, k, sorts) if word == "rel" else _disj_body(lx, k, sorts))
    return out


def parse_relation(text):
    items = parse_relations(text)
    if len(items) != 1:
        raise ParseError(f"expected one literal, found {len(items)}", text, len(text))
    return items[0]


def as_relation(item):
    return materialize(item) if isinstance(item, DisjunctiveForm) else item


def format_relation(rel):
    head = f"k={rel.k} sorts=[{','.join(map(str, rel.sorts))}]"
    if rel.arity == 0 and rel.bits:
        return f"disj {head} : 0=0"
    body = ",".join("".join(map(str, t)) for t in rel)
    return f"rel {head} {{{body}}}"


def format_form(df):
    head = f"disj k={df.k} sorts=[{','.join(map(str, df.sorts))}]"
    clauses = " | ".join(format_equation(c) for c in df.clauses) or "0=1"
    return f"{head} : {clauses}"


# -- commands ---------------------------------------------------------------------


class Failure(Exception):
    """A property check failed (exit status 1)."""


def _read(path):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}")
    try:
        return [as_relation(x) for x in parse_relations(text)]
    except ParseError as e:
        raise UsageError(f"{path}: {e}")
    except ValueError as e:
        raise UsageError(f"{path}: {e}")


class UsageError(Exception):
    pass


def _config(args, cap=None, pol_cap=None):
    return ClosureConfig(arity_cap=cap, pol_cap=pol_cap or 4, threads=args.threads)


def cmd_key(args, out):
    failed = False
    for rel in _read(args.file):
        df = to_disjunctive_form(rel)
        if df is None:
            out.write(f"not a key relation: {format_relation(rel)}\n")
            failed = True
        else:
            out.write(format_form(df) + "\n")
    if failed:
        raise Failure("input contains a relation that is not a key relation")
    return 0


def cmd_classify(args, out):
    failed = False
    for rel in _read(args.file):
        d = classify(rel)
        if d is None:
            out.write(f"not canonical: {format_relation(rel)}\n")
            failed = True
        else:
            out.write(f"{d}  {d.formula()}\n")
    if failed:
        raise Failure("input contains a relation that is not canonical")
    return 0


def cmd_closure(args, out):
    S = _read(args.file)
    if not S and args.k is None:
        raise UsageError("empty language: give --k")
    cfg = _config(args, args.cap)
    cap = cfg.cap_for(*(r.arity for r in S))
    eng = engine(S, args.k, quantify=args.mode == "qpp", cap=cap).grow(cap)
    rels = sorted(eng.relations(), key=lambda r: (r.arity, r.sorts, r.bits))
    for rel in rels:
        out.write(format_relation(rel) + "\n")
    return 0


def cmd_member(args, out):
    targets = _read(args.target)
    S = _read(args.lang) if args.lang else []
    cfg = _config(args, args.cap, args.pol_cap)
    for rel in targets:
        v = member(rel, S, cfg, quantify=not args.pp)
        out.write(f"{str(v).upper()}\n")
    return 0


def cmd_galois(args, out):
    S = _read(args.file)
    if not S and args.k is None:
        raise UsageError("empty language: give --k")
    k = args.k or S[0].k
    ops = pol_bounded(S, args.cap, surjective_only=args.which != "pol", k=k)
    if args.which in ("pol", "spol"):
        for a in range(1, args.cap + 1):
            out.write(f"arity {a}: {len(ops.of_arity(a))}\n")
        if args.list:
            for f in ops:
                tables = " ".join(format(t, f"0{1 << f.arity}b")[::-1] for t in f.tables)
                out.write(f"  {f.arity}: {tables}\n")
        return 0
    for rel in inv_bounded(ops, args.arity):
        out.write(format_relation(rel) + "\n")
    return 0


def cmd_lattice(args, out):
    from .lattice import build_fig1, derive_post, emit

    cfg = _config(args, args.cap or 6)
    lat = build_fig1(args.trunc, cfg)
    if args.which == "post":
        lat = derive_post(lat, cfg)
    for path, fmt in ((args.dot, "dot"), (args.json, "json")):
        if path:
            data = emit(lat, fmt)
            try:
                if path == "-":
                    out.write(data.decode())
                else:
                    Path(path).write_bytes(data)
            except OSError as e:
                raise UsageError(f"{path}: {e.strerror}")
    if not (args.dot == "-" or args.json == "-"):
        out.write(f"{len(lat.nodes)} nodes, {len(lat.edges)} cover edges\n")
        for i, node in enumerate(lat.nodes):
            mark = " *" if node.flagged else ""
            out.write(f"  n{i}: {node.label}{mark}\n")
    for msg in lat.unverified:
        sys.stderr.write(f"unverified: {msg}\n")
    if lat.unverified:
        raise Failure(f"{len(lat.unverified)} inclusions not derived within the cap")
    return 0


def cmd_verify(args, out):
    from .verify import run_suite

    report = run_suite(args.suite, args.k, _config(args, args.cap))
    for line in report.lines():
        out.write(line + "\n")
    if not report.ok:
        raise Failure(f"suite {args.suite}: {sum(not c.ok for c in report.checks)} checks failed")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="clonelab", description="Quantified relational clones on {0,1}.")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("key", help="print the canonical disjunctive form")
    s.add_argument("file")
    s.set_defaults(run=cmd_key)

    s = sub.add_parser("classify", help="name the canonical shape of each relation")
    s.add_argument("file")
    s.set_defaults(run=cmd_classify)

    s = sub.add_parser("closure", help="list closure representatives under the elementary operations")
    s.add_argument("file")
    s.add_argument("--mode", choices=("pp", "qpp"), default="qpp")
    s.add_argument("--cap", type=int, default=None, help="working arity cap W")
    s.add_argument("--k", type=int, default=None)
    s.set_defaults(run=cmd_closure)

    s = sub.add_parser("member", help="decide membership of each target")
    s.add_argument("--target", required=True)
    s.add_argument("--lang", default=None)
    s.add_argument("--cap", type=int, default=None, help="working arity cap W")
    s.add_argument("--pol-cap", type=int, default=4, help="polymorphism arity M")
    s.add_argument("--pp", action="store_true", help="primitive positive closure instead")
    s.set_defaults(run=cmd_member)

    s = sub.add_parser("galois", help="bounded polymorphisms and invariants")
    s.add_argument("which", choices=("pol", "spol", "inv"))
    s.add_argument("file")
    s.add_argument("--cap", type=int, default=2, help="operation arity bound M")
    s.add_argument("--arity", type=int, default=2, help="relation arity bound for inv")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--list", action="store_true", help="print the operation tables")
    s.set_defaults(run=cmd_galois)

    s = sub.add_parser("lattice", help="build the truncated lattice of 1-sorted closed sets")
    s.add_argument("which", choices=("fig1", "post"))
    s.add_argument("--trunc", type=int, default=4)
    s.add_argument("--cap", type=int, default=None, help="working arity cap W (default 6)")
    s.add_argument("--dot", default=None)
    s.add_argument("--json", default=None)
    s.set_defaults(run=cmd_lattice)

    s = sub.add_parser("verify", help="run a verification suite")
    s.add_argument("--suite", required=True, choices=("lemmas", "galois", "canonical", "fig1"))
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--cap", type=int, default=None)
    s.set_defaults(run=cmd_verify)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.run(args, out)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except Failure as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except (BudgetError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
