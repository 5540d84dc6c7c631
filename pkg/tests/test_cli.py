import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from chromatic_comod.cli import run
from chromatic_comod.comod import Comodule, comodule_from_json
from chromatic_comod.landweber import algebra_from_json

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def call(*argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], out=out)
    return code, out.getvalue()


def body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_etaR_example():
    code, out = call("etaR", "--prime", 2, "--vars", 3, "--n", 1)
    assert code == 0 and body(out) == ["v1 - 2*t1"]


def test_height_example():
    code, out = call("height", DATA / "E1.json")
    assert code == 0 and body(out) == ["1"]


def test_localize_example():
    code, out = call("localize", DATA / "BP_mod_I1.json", "--n", 1, "--min", -20, "--max", 20)
    assert code == 0
    lines = body(out)
    assert lines[0].startswith("L_1: v1^-1BP/(p)") and "verified: True" in lines[0]
    # nonzero exactly in even degrees
    table = dict(ln.split(None, 1) for ln in lines[1:])
    assert all((table[str(d)] != "0") == (d % 2 == 0) for d in range(-20, 21))


def test_algebroid_check_and_window_guard():
    assert call("algebroid", "check", "--max-deg", 28)[0] == 0
    assert call("algebroid", "check", "--max-deg", 30)[0] == 2
    assert call("algebroid", "check", "--max-deg", 12, "--base", DATA / "E1.json")[0] == 0


def test_unsound_override_is_stamped():
    code, out = call("primitives", DATA / "BP_mod_I1.json", "--min", 28, "--max", 31, "--unsound", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["stamp"]["warnings"]


def test_verdict_failures_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"quotient": ["v1"]}))
    assert call("comodule", bad)[0] == 1
    assert call("weq", DATA / "E1.json", DATA / "E2.json")[0] == 1


def test_input_errors_exit_2(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"quotient": [')
    code, _ = call("comodule", broken)
    assert code == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text('"K(9)"')
    assert call("height", unknown)[0] == 2
    assert call("height", tmp_path / "missing.json")[0] == 2
    assert call("etaR", "--n", 1, "--prime", 7)[0] == 2
    assert call("nonsense")[0] == 2


def test_json_output_is_deterministic():
    def once():
        code, out = call("primitives", DATA / "BP_mod_p_v1sq.json", "--max", 10, "--json")
        doc = json.loads(out)
        doc.pop("seconds")
        return json.dumps(doc, sort_keys=True)
    assert once() == once()


@pytest.mark.parametrize("cmd", [
    ["filtrate", DATA / "BP_mod_p_v1sq.json"],
    ["classify", DATA / "BP_plus_BP_mod_I2.json"],
    ["exactness", DATA / "v1BP.json"],
    ["hom", "--algebra", DATA / "E1.json", "--module", DATA / "E1_mod_p.json", "--min", -4, "--max", 4],
    ["ext", DATA / "BP_mod_I1.json", "--s", 1, "--max", 6],
    ["ext", DATA / "BP_mod_I1.json", "--s", 1, "--koszul", 1, "--max", 6],
    ["weq", DATA / "v1BP.json", DATA / "E1.json"],
])
def test_subcommands_run(cmd):
    code, out = call(*cmd, "--json")
    assert code == 0
    assert json.loads(out)["ok"]


def test_example_documents_round_trip():
    for path in sorted(DATA.glob("*.json")):
        doc = json.loads(path.read_text())
        if isinstance(doc, str) or "invert" in doc:
            B = algebra_from_json(doc, 2, 3)
            B2 = algebra_from_json(json.loads(json.dumps(B.to_json())), 2, 3)
            assert (B.invert, B.omit) == (B2.invert, B2.omit)
            continue
        M = comodule_from_json(doc, 2, 3)
        M2 = comodule_from_json(json.loads(json.dumps(M.to_json())), 2, 3)
        for d in range(-6, 12):
            assert M.structure(d).describe() == M2.structure(d).describe(), (path.name, d)
        if isinstance(M, Comodule):
            assert M.to_json() == M2.to_json()


def test_documents_match_schemas():
    jsonschema = pytest.importorskip("jsonschema")
    from referencing import Registry, Resource
    alg = json.loads((ROOT / "docs" / "algebra.schema.json").read_text())
    com = json.loads((ROOT / "docs" / "comodule.schema.json").read_text())
    reg = Registry().with_resource("algebra.schema.json", Resource.from_contents(alg))
    for path in sorted(DATA.glob("*.json")):
        doc = json.loads(path.read_text())
        schema = alg if isinstance(doc, str) or "invert" in doc else com
        jsonschema.Draft202012Validator(schema, registry=reg).validate(doc)


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "chromatic_comod", "etaR", "--n", "1"],
                       capture_output=True, text=True, cwd=ROOT)
    assert r.returncode == 0 and r.stdout.strip().endswith("v1 - 2*t1")
