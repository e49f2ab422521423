import io
import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given

from clonelab.cli import ParseError, format_form, format_relation, main, parse_relation, parse_relations
from clonelab.gf2 import DisjunctiveForm, materialize, to_disjunctive_form

from conftest import rel_of, relations

GOLDEN = Path(__file__).parent / "golden"


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


def test_parse_examples():
    assert parse_relation("rel k=1 sorts=[1,1] {01,10}") == rel_of([1, 1], lambda x, y: x ^ y)
    df = parse_relation("disj k=2 sorts=[1,2] : x1=0 | x2=1")
    assert isinstance(df, DisjunctiveForm)
    assert materialize(df) == rel_of([1, 2], lambda x, y: x == 0 or y == 1)


def test_parse_whitespace_and_comments():
    text = "# two literals\nrel  k = 1 sorts=[ 1 ]\n  { 0 }\ndisj k=1 sorts=[1,1]:x1+x2+1=0"
    a, b = parse_relations(text)
    assert a == rel_of([1], lambda x: x == 0)
    assert materialize(b) == rel_of([1, 1], lambda x, y: x ^ y)
    assert parse_relation("rel k=1 sorts=[1] {}").bits == 0


@pytest.mark.parametrize("text,where", [
    ("rel k=1 sorts=[1] {0,1,2}", (1, 24)),
    ("rel k=1 sorts=[2] {0}", (1, 16)),
    ("rel k=1 sorts=[1,1] {0}", (1, 22)),
    ("disj k=1 sorts=[1] : x2=0", (1, 22)),
    ("rel k=1\n sorts=[1] {0", (2, 14)),
    ("relation k=1 sorts=[] {}", (1, 1)),
])
def test_parse_errors_carry_position(text, where):
    with pytest.raises(ParseError) as e:
        parse_relation(text)
    assert (e.value.line, e.value.column) == where


@given(relations())
def test_print_parse_round_trip(rel):
    again = parse_relation(format_relation(rel))
    got = materialize(again) if isinstance(again, DisjunctiveForm) else again
    assert got == rel


@given(relations(max_arity=4))
def test_form_round_trip(rel):
    df = to_disjunctive_form(rel)
    if df is None:
        return
    text = format_form(df)
    back = parse_relation(text)
    assert materialize(back) == rel
    assert format_form(to_disjunctive_form(materialize(back))) == text


def test_key_command(write):
    f = write("a.rel", "rel k=1 sorts=[1,1] {00,01,11}")
    assert run(["key", f]) == (0, "disj k=1 sorts=[1,1] : x1=0 | x2=1\n")
    g = write("b.rel", "rel k=1 sorts=[1,1] {11}")
    code, out = run(["key", g])
    assert code == 1 and out.startswith("not a key relation")


def test_classify_command(write):
    f = write("a.rel", "rel k=1 sorts=[1,1] {01,10}\nrel k=1 sorts=[1,1] {00,01,11}")
    code, out = run(["classify", f])
    assert code == 0 and out.splitlines() == ["c4(1)  x+y=1", "c1(1)  x=0 ∨ y=1"]


def test_member_command(write):
    t = write("t.rel", "rel k=1 sorts=[1] {0}")
    s = write("s.rel", "rel k=1 sorts=[1,1] {01,10}")
    assert run(["member", "--target", t, "--lang", s, "--cap", "6", "--pol-cap", "4"]) == (0, "OUT\n")
    eq = write("e.rel", "rel k=1 sorts=[1,1] {00,11}")
    p = write("p.rel", "disj k=1 sorts=[1,1,1,1] : x1+x2+x3+x4=0")
    assert run(["member", "--target", eq, "--lang", p]) == (0, "IN\n")


def test_closure_and_galois(write):
    f = write("a.rel", "rel k=1 sorts=[1] {0}")
    code, out = run(["closure", f, "--cap", "2"])
    assert code == 0 and "rel k=1 sorts=[1] {0}" in out.splitlines()
    code, out = run(["galois", "spol", write("x.rel", "rel k=1 sorts=[1,1] {01,10}"), "--cap", "1"])
    assert (code, out) == (0, "arity 1: 2\n")
    code, out = run(["galois", "inv", f, "--cap", "1", "--arity", "1"])
    assert code == 0 and "rel k=1 sorts=[1] {0}" in out
    assert run(["closure", write("e.rel", "")])[0] == 2


def test_lattice_command(tmp_path):
    dot, js = tmp_path / "l.dot", tmp_path / "l.json"
    code, out = run(["lattice", "fig1", "--trunc", "1", "--dot", str(dot), "--json", str(js)])
    assert code == 0 and out.startswith("17 nodes, 29 cover edges")
    assert dot.read_bytes() == (GOLDEN / "fig1_L1.dot").read_bytes()
    assert len(json.loads(js.read_text())["nodes"]) == 17
    code, out = run(["lattice", "fig1", "--trunc", "1", "--dot", "-"])
    assert out.encode() == (GOLDEN / "fig1_L1.dot").read_bytes()


def test_verify_command():
    code, out = run(["verify", "--suite", "galois", "--k", "1"])
    assert code == 0 and all(line.startswith("PASS") for line in out.splitlines())


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["key"],
    ["key", "/nonexistent/file.rel"],
    ["--threads", "0", "key", "x"],
    ["galois", "pol", "-", "--cap", "9"],
])
def test_usage_errors(argv, capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("rel k=3 sorts=[1] {0}"))
    code, _ = run(argv)
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith("error:") and err.count("\n") == 1


def test_bad_literal_reports_position(write, capsys):
    f = write("bad.rel", "rel k=1 sorts=[1] {0,1,2}")
    assert run(["key", f])[0] == 2
    assert "column 24" in capsys.readouterr().err


def test_console_script_deterministic(tmp_path):
    f = tmp_path / "a.rel"
    f.write_text("rel k=2 sorts=[1,2,2] {000,011,100,111,010}")
    cmd = [sys.executable, "-m", "clonelab.cli", "closure", str(f), "--cap", "3"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd[:3] + ["--threads", "1"] + cmd[3:], capture_output=True)
    assert a.returncode == 0 and a.stdout == b.stdout and a.stdout
