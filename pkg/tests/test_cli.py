import io
import json
import subprocess
import sys
from importlib import resources

import pytest

from otparse.cli import main
from otparse.constraints import MarkVector
from otparse.oracle import evaluate_global


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    data = resources.files("otparse") / "data"
    g = tmp_path / "syllable.grammar"
    c = tmp_path / "syllable.constraints"
    g.write_text((data / "syllable.grammar").read_text(encoding="utf-8"), encoding="utf-8")
    c.write_text((data / "syllable.constraints").read_text(encoding="utf-8"), encoding="utf-8")
    return ["--grammar", str(g), "--constraints", str(c)], g, c


def test_parse_vc(files):
    code, out, err = run("parse", *files[0], "--input", "VC")
    assert code == 0 and err == ""
    assert "tree     S(F(Y(M(□),F(Y(P(V))),M(C))))" in out
    assert "marks    Fill^m:1" in out
    assert "surface  □VC" in out


def test_parse_faithful_and_verbose(files):
    code, out, _ = run("parse", *files[0], "--input", "V", "--verbose")
    assert code == 0
    assert "marks    none" in out and "S(F(Y(P(p/V))))" in out


def test_parse_marker_and_tsv(files):
    code, out, _ = run("parse", *files[0], "--input", "VC", "--input", "CV", "--marker", "_", "--format", "tsv")
    lines = out.splitlines()
    assert lines[0] == "input\ttree\tmarks\tsurface"
    assert lines[1].endswith("\t_VC")
    assert len(lines) == 3


def test_parse_unknown_segment(files):
    code, out, err = run("parse", *files[0], "--input", "VX")
    assert code == 2 and out == "" and "unknown segment" in err


def test_missing_file():
    code, _, err = run("parse", "--grammar", "/nonexistent/g", "--input", "V")
    assert code == 1 and "cannot load" in err


def test_corrupted_ranking(files):
    argv, _, c = files
    c.write_text(c.read_text(encoding="utf-8").replace("ranking:", "ranking: Bogus >>"), encoding="utf-8")
    code, _, err = run("verify", *argv, "--input", "VC")
    assert code == 1 and "unknown constraint" in err


def test_json_round_trip(files):
    code, out, _ = run("parse", *files[0], "--input", "CCVCC", "--format", "json")
    payload = json.loads(out)
    assert payload["surface"] == "CCVCC" and payload["marks"] == {}
    assert payload["tree"]["label"] == "S"
    assert all(p["passes"] <= 7 for p in payload["passes"])
    assert len(payload["passes"]) == 15


def test_printed_marks_reevaluate(files, parser, system):
    for word in ["C", "VC", "CVCC"]:
        code, out, _ = run("parse", *files[0], "--input", word, "--format", "json")
        payload = json.loads(out)
        d = parser.parse(word).description
        assert MarkVector(payload["marks"]) == evaluate_global(d, system)


def test_output_is_deterministic(files):
    first = run("trace", *files[0], "--input", "CVC")
    assert first == run("trace", *files[0], "--input", "CVC")


def test_trace_vc(files):
    code, out, _ = run("trace", *files[0], "--input", "VC")
    lines = out.splitlines()
    assert code == 0
    assert lines[-1].startswith("result [S,1,2] <- ")
    blocks = [ln for ln in lines if ln.startswith("block ")]
    assert [b.split()[1] for b in blocks] == ["[1,1]", "[2,2]", "[1,2]"]
    assert all(int(b.split("passes=")[1]) <= 7 for b in blocks)


def test_trace_empty_input(files):
    code, out, _ = run("trace", *files[0], "--input", "")
    assert code == 0
    assert not any(ln.startswith(("block ", "result ")) for ln in out.splitlines())


def test_verify_all_short_inputs(files):
    code, out, _ = run("verify", *files[0], "--max-length", "4")
    assert code == 0
    assert out.splitlines()[-1] == "30/30 OK"


def test_verify_single(files):
    code, out, _ = run("verify", *files[0], "--input", "VC")
    assert code == 0 and "engine=Fill^m:1" in out and "oracle=Fill^m:1" in out


def test_verify_size_guard(files):
    code, _, err = run("verify", *files[0], "--input", "CVCVCVCVC")
    assert code == 3


def test_typology(files):
    code, out, _ = run("typology", *files[0], "--input", "V", "--input", "VC", "--input", "CVC")
    assert code == 0
    rows = [ln.split() for ln in out.splitlines()[2:]]
    assert ["V", "□VC", "CVC"] in [r[-3:] for r in rows]


def test_typology_guard(files, tmp_path):
    c = tmp_path / "many.constraints"
    names = [f"K{i}" for i in range(7)]
    c.write_text(
        "alphabet: C V\nconstraint F1 = fill(m)\nconstraint F2 = fill(p)\n"
        + "".join(f"constraint {n} = parse\n" for n in names[2:])
        + "ranking: " + " >> ".join(["F1", "F2"] + names[2:]) + "\n",
        encoding="utf-8",
    )
    code, _, err = run("typology", "--grammar", files[0][1], "--constraints", str(c), "--input", "V")
    assert code == 3


def test_inputs_file(files, tmp_path):
    f = tmp_path / "words.txt"
    f.write_text("# words\nV\nCVC\n\n", encoding="utf-8")
    code, out, _ = run("parse", *files[0], "--inputs", str(f), "--format", "tsv")
    assert code == 0 and len(out.splitlines()) == 3


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "otparse.cli", "parse", "--input", "VC"], capture_output=True, text=True)
    assert proc.returncode == 0 and "□VC" in proc.stdout
