import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from ppcf import parse, typecheck
from ppcf import stdlib as lib
from ppcf.cli import main

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    data = json.loads(out)
    assert data["schema"] == 1
    return data


def masses(data):
    return {row["value"]: Fraction(row["prob"]) for row in data["distribution"]}


@pytest.mark.parametrize("path", sorted(p for p in CORPUS.glob("*.ppcf") if p.stem != "ill_typed"))
def test_check_corpus(capsys, path):
    code, out, _ = run(capsys, "check", path)
    assert code == 0
    assert out.strip() == str(typecheck((), parse(path.read_text())))


def test_check_ill_typed(capsys):
    code, _, err = run(capsys, "check", CORPUS / "ill_typed.ppcf")
    assert code == 1 and "ill_typed.ppcf" in err and "type error" in err


def test_check_empty_file(capsys, tmp_path):
    f = tmp_path / "empty.ppcf"
    f.write_text("")
    code, _, err = run(capsys, "check", f)
    assert code == 1 and f"{f}:1:1: parse error" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "check", tmp_path / "nope.ppcf")
    assert code == 1 and "nope.ppcf" in err


def test_dist(capsys):
    data = run_json(capsys, "dist", CORPUS / "coin.ppcf", "-k", "1")
    assert masses(data) == {0: Fraction(1, 2), 1: Fraction(1, 2)} and data["residual"] == "0/1"
    data = run_json(capsys, "dist", CORPUS / "ran.ppcf")
    assert masses(data) == {0: Fraction(1, 2), 1: Fraction(1, 4), 2: Fraction(1, 4)}
    data = run_json(capsys, "dist", CORPUS / "omega.ppcf", "-k", "50")
    assert data["distribution"] == [] and data["residual"] == "1/1" and data["steps"] == 50


def test_dist_table(capsys):
    code, out, _ = run(capsys, "dist", CORPUS / "ran.ppcf", "--format", "table")
    assert code == 0
    assert out.splitlines() == ["0\t1/2", "1\t1/4", "2\t1/4", "residual\t0/1"]


def test_dist_mass_floor(capsys):
    data = run_json(capsys, "dist", CORPUS / "unif3.ppcf", "-k", "200", "--mass-floor", "1/50")
    assert Fraction(data["floored"]) > 0


def test_resource_limit_exit_code(capsys):
    code, _, err = run(capsys, "dist", CORPUS / "unif3.ppcf", "--max-states", "1")
    assert code == 2 and "resource limit" in err


def test_denot(capsys):
    data = run_json(capsys, "denot", CORPUS / "unif3.ppcf", "--trunc", "8", "--fix-iters", "50")
    assert masses(data) == {i: Fraction(1, 4) for i in range(4)}
    assert data["dropped_mass"] == "0/1" and data["last_fix_delta"] == "0/1" and data["trunc"] == 8


def test_denot_float(capsys):
    data = run_json(capsys, "denot", CORPUS / "ran.ppcf", "--float")
    assert data["distribution"][0]["prob"] == 0.5


def test_denot_rejects_arrow_types(capsys):
    code, _, err = run(capsys, "denot", CORPUS / "m1.ppcf")
    assert code == 1 and "nat" in err


def test_adequacy(capsys):
    data = run_json(capsys, "adequacy", CORPUS / "coin.ppcf", "-k", "1")
    assert data["equal"] and data["max_delta"] == "0/1"
    data = run_json(capsys, "adequacy", CORPUS / "omega.ppcf", "-k", "20")
    assert data["deltas"] == [] and data["equal"]
    data = run_json(capsys, "adequacy", CORPUS / "add23.ppcf")
    assert data["deltas"] == [{"value": 5, "delta": "0/1"}]


def test_adequacy_converges_on_unif(capsys):
    data = run_json(capsys, "adequacy", CORPUS / "unif3.ppcf", "-k", "2000", "--fix-iters", "50")
    assert not data["equal"]
    assert Fraction(data["max_delta"]) < Fraction(1, 1000)


def test_run(capsys):
    data = run_json(capsys, "run", CORPUS / "coin.ppcf", "--seed", "3", "--samples", "400")
    counts = {row["value"]: row["count"] for row in data["histogram"]}
    assert sum(counts.values()) == 400 and set(counts) == {0, 1}
    again = run_json(capsys, "run", CORPUS / "coin.ppcf", "--seed", "3", "--samples", "400")
    assert again == data


def test_run_timeouts(capsys):
    data = run_json(capsys, "run", CORPUS / "omega.ppcf", "--samples", "3", "--max-steps", "10")
    assert data["timeouts"] == 3 and data["histogram"] == []


def test_separate(capsys):
    data = run_json(
        capsys, "separate", CORPUS / "m1.ppcf", CORPUS / "m2.ppcf",
        "--point", "([0],0)", "--grid-denom", "2", "--confirm-steps", "500",
    )
    assert data["found"] and data["probs"] == ["1/2"]
    assert data["denot"] == ["1/2", "1/4"] and data["operational"] == ["1/2", "1/4"]


def test_separate_searches_the_web(capsys):
    data = run_json(capsys, "separate", CORPUS / "m1.ppcf", CORPUS / "m2.ppcf", "--type", "nat -> nat", "--web-size", "1")
    assert data["found"]


def test_separate_identical(capsys):
    data = run_json(capsys, "separate", CORPUS / "m1.ppcf", CORPUS / "m1.ppcf", "--web-size", "1", "--refinements", "0")
    assert data["found"] is False and data["points_tried"] > 0


def test_separate_type_mismatch(capsys):
    code, _, err = run(capsys, "separate", CORPUS / "m1.ppcf", CORPUS / "coin.ppcf")
    assert code == 1


def test_stdlib(capsys):
    code, out, _ = run(capsys, "stdlib", "ran", "1/2", "1/4", "1/4")
    assert code == 0 and parse(out) == lib.ran([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    code, _, err = run(capsys, "stdlib", "shift", "x")
    assert code == 1


def test_output_is_reproducible(capsys):
    first = run(capsys, "denot", CORPUS / "las_vegas.ppcf")
    second = run(capsys, "denot", CORPUS / "las_vegas.ppcf")
    assert first == second


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "ppcf", "check", str(CORPUS / "add23.ppcf")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "nat"
