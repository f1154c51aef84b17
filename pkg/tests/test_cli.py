import json
import subprocess
import sys

import pytest

from hkr_retract.cli import cmd_class, cmd_primitive, cmd_verify, certify, main
from hkr_retract.graded_algebra import EXT, Element
from hkr_retract.hkr_model import FlatModel, Symbol, lie_derivative_symbol, symbol, unit_symbol
from hkr_retract.scalars import Polynomial

M2 = FlatModel(2)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out), out


def write_symbol(tmp_path, s: Symbol, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(s.to_json()))
    return str(path)


# -- verify -------------------------------------------------------------------


def test_verify_passes(capsys):
    code, out, _ = run(["verify", "van_est", "--dim", "2", "--deg", "2"], capsys)
    assert code == 0 and out["ok"] and out["seed"] == 0 and out["checked"] > 0
    code, out, _ = run(["verify", "hkr", "--n", "2", "--deg", "2"], capsys)
    assert code == 0 and out["ok"]


@pytest.mark.parametrize("suite,fault,params", [
    ("van_est", "h", ["--dim", "2", "--deg", "2"]),
    ("ca", "delta_ca", ["--dim", "2", "--deg", "2"]),
    ("symbols", "op_prefactor", ["--n", "1", "--deg", "2"]),
])
def test_injected_faults_are_caught(capsys, suite, fault, params):
    code, out, _ = run(["verify", suite, *params, "--inject", fault], capsys)
    assert code == 1 and not out["ok"]
    assert out["inject"] == fault and out["witness"]["failures"]


def test_faults_do_not_leak():
    code, _ = cmd_verify("van_est", dim=2, deg=2, inject="h")
    assert code == 1
    code, _ = cmd_verify("van_est", dim=2, deg=2)
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["verify", "no_such_suite"],
    ["verify", "van_est", "--dim", "-1"],
    ["verify", "van_est", "--dim", "99"],
    ["verify", "van_est", "--inject", "bogus"],
    ["frobnicate"],
    [],
])
def test_usage_errors(capsys, argv):
    code, out, _ = run(argv, capsys)
    assert code == 2 and "error" in out


def test_output_is_byte_deterministic(capsys):
    argv = ["verify", "symbols", "--n", "1", "--deg", "2", "--seed", "3"]
    first = run(argv, capsys)[2]
    second = run(argv, capsys)[2]
    assert first == second


# -- primitive and class -------------------------------------------------------


def test_primitive_of_the_multiplication(tmp_path, capsys):
    code, out, _ = run(["primitive", write_symbol(tmp_path, unit_symbol(M2, 2))], capsys)
    assert code == 0 and out["accepted"] and out["closed"]
    assert Symbol.from_json(out["primitive"]) == unit_symbol(M2, 1)
    assert not Element.from_json(out["class_multivector"])
    assert not Symbol.from_json(out["reconstruction_residual"])
    assert out["round_trip"]["ok"] and out["round_trip"]["samples"] == 20


def test_primitive_flags_non_closed_input():
    x_or_y = symbol(M2, (1, 2))
    code, out = cmd_primitive(x_or_y)
    assert code == 0 and not out["closed"]
    want = -(symbol(M2, (1,), (2,)) + symbol(M2, (2,), (1,)))
    assert Symbol.from_json(out["closedness_residual"]) == want
    assert not Symbol.from_json(out["reconstruction_residual"])


def test_antisymmetrized_cup():
    a = symbol(M2, (1,), (2,)) - symbol(M2, (2,), (1,))
    code, out = cmd_primitive(a)
    assert code == 0 and out["closed"] and out["accepted"]
    assert not Symbol.from_json(out["primitive"])
    assert Element.from_json(out["class_multivector"]) == Element(EXT, {(1, 2): Polynomial.constant(2, 2)})


def test_class_examples(tmp_path, capsys):
    field = lie_derivative_symbol(M2, {1: Polynomial.variable(2, 2), 2: 1})
    code, out, _ = run(["class", write_symbol(tmp_path, field)], capsys)
    assert code == 0
    assert Element.from_json(out["class_multivector"]) == Element(
        EXT, {(1,): Polynomial.variable(2, 2), (2,): Polynomial.one(2)})
    assert not Element.from_json(cmd_class(unit_symbol(M2, 2))[1]["class_multivector"])
    xy = Element.from_json(cmd_class(symbol(M2, (1,), (2,)))[1]["class_multivector"])
    assert xy == Element(EXT, {(1, 2): Polynomial.one(2)})


def test_certificate_round_trip_is_seeded():
    s = symbol(M2, (1, 1), (2,), coef=Polynomial.variable(2, 1)) + symbol(M2, (), (1,))
    a, b = certify(s, seed=7), certify(s, seed=7)
    assert a.accepted and a.to_json() == b.to_json()
    assert a.round_trip.checked == 20 * len({len(lab) for lab in s.terms})


def test_symbol_json_round_trip():
    m = FlatModel(3, rE=2, rF=1)
    s = Symbol.word(m, (((1,),), ((2, 3), 2)), Polynomial.variable(3, 1), variant="bundle")
    assert Symbol.from_json(json.loads(json.dumps(s.to_json()))) == s
    f = FlatModel(3, fiber=1)
    t = Symbol.word(f, (((1,), (2,)), (3,)), 5, variant="fiber")
    assert Symbol.from_json(t.to_json()) == t


@pytest.mark.parametrize("content", [
    "not json",
    "[1, 2]",
    '{"n": 2}',
    '{"n": 2, "terms": [[[[3]], "1"]]}',
    '{"n": 2, "variant": "weird", "terms": []}',
])
def test_malformed_input(tmp_path, capsys, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    for cmd in ("primitive", "class"):
        code, out, _ = run([cmd, str(path)], capsys)
        assert code == 2 and "error" in out


def test_missing_file(capsys):
    code, out, _ = run(["class", "/nonexistent/x.json"], capsys)
    assert code == 2


def test_console_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hkr_retract", "verify", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and json.loads(proc.stdout)["error"]
