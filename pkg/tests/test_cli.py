import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema

from sasjoin import join
from sasjoin.cli import SCHEMAS, main

EX = Path(__file__).resolve().parent.parent / "docs" / "examples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# bott-check ---------------------------------------------------------------------------------

def test_bott_check_product_text(capsys):
    code, out, _ = run(capsys, "bott-check", EX / "product_n2.json", "--format", "text")
    assert code == 0
    assert "log Fano: true" in out and "Fano index: 2" in out


def test_bott_check_hirzebruch_json_and_strict(capsys):
    code, out, _ = run(capsys, "bott-check", EX / "hirzebruch_a2.json")
    assert code == 0
    rep = json.loads(out)
    assert rep["log_fano"] is False and rep["failing_bases"]
    code, out, _ = run(capsys, "bott-check", EX / "hirzebruch_a2.json", "--format", "text", "--strict")
    assert code == 1
    assert "log Fano: false" in out and "x1,y2" in out


def test_bott_check_ample(capsys):
    code, out, _ = run(capsys, "bott-check", EX / "hirzebruch_a2.json", "--ample", "3,1", "--format", "text")
    assert code == 0 and "ample" in out


def test_malformed_matrix_exits_2(capsys):
    code, _, err = run(capsys, "bott-check", EX / "malformed.json")
    assert code == 2
    assert json.loads(err)["error"] == "input"


def test_schema_violation_and_missing_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "A": [[1, 0], [0, 1]], "extra": 1}))
    assert run(capsys, "bott-check", bad)[0] == 2
    bad.write_text("{not json")
    assert run(capsys, "bott-check", bad)[0] == 2
    assert run(capsys, "bott-check", tmp_path / "nope.json")[0] == 2
    assert run(capsys, "no-such-command")[0] == 2


# join --------------------------------------------------------------------------------------------

def test_join_analyze_y21(capsys):
    code, out, _ = run(capsys, "join-analyze", EX / "y21.json")
    assert code == 0
    rep = json.loads(out)
    assert rep["stage2_c1"] == {"bundle": "trivial", "coefficient": 0, "gorenstein": True}
    assert rep["final_stage_without_reeb"]["smoothness"]["smooth"] is True


def test_join_analyze_missing_v_exits_2(capsys):
    assert run(capsys, "join-analyze", EX / "missing_v.json")[0] == 2


def test_join_smooth_dim9(capsys):
    code, out, _ = run(capsys, "join-smooth", EX / "dim9_t91.json", "--format", "text", "--strict")
    assert code == 0 and "smooth: true" in out.lower()


def test_join_smooth_false_under_strict(tmp_path, capsys):
    p = tmp_path / "t.json"
    # Upsilon_1 = 2 and l = (1, 2), w = (2, 1): gcd(2*2, 1*2*1) = 2
    p.write_text(json.dumps({"stages": [{"w": [2, 1]}, {"l": [1, 2], "w": [2, 1]}]}))
    code, out, _ = run(capsys, "join-smooth", p, "--strict")
    assert code == 1
    assert json.loads(out)["certificate"]["witness_prime"] == "2"


def test_invariant_violation_exits_3(capsys, monkeypatch):
    def broken(n_k, omega):
        raise join.IntegralityError("corrupted row")
    monkeypatch.setattr(join, "matrix_row", broken)
    code, _, err = run(capsys, "join-analyze", EX / "dim7_torsion.json")
    assert code == 3 and json.loads(err)["error"] == "invariant"


# cscs ------------------------------------------------------------------------------------------------

def test_cscs_count(capsys):
    code, out, _ = run(capsys, "cscs-count", "--l0", 1, "--linf", 100, "--w0", 2, "--winf", 1, "--format", "text")
    assert code == 0 and "rays: 3" in out
    code, out, _ = run(capsys, "cscs-count", "--l0", 1, "--linf", 1, "--w0", 2, "--winf", 1, "--format", "text")
    assert "rays: 1" in out
    assert run(capsys, "cscs-count", "--l0", 1, "--linf", 1, "--w0", 1, "--winf", 2)[0] == 2


def test_cscs_threshold(capsys):
    code, out, _ = run(capsys, "cscs-threshold", "--l0", 1, "--w0", 2, "--winf", 1, "--linf", 14)
    assert code == 0
    rep = json.loads(out)
    lo, hi = (Fraction(x) for x in rep["interval"])
    assert 13 < lo <= hi < 14


# search ------------------------------------------------------------------------------------------------

def test_search_ypq(capsys):
    code, out, _ = run(capsys, "search-ypq", "--max-p", 50)
    assert code == 0
    assert {"p": 19, "q": 5, "n": 37} in json.loads(out)["solutions"]


def test_search_se_builtin_and_file_seed(tmp_path, capsys):
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, "search-se", "--seed", "dim7", "--w-max", 64, "--ratio", 2, "--out", out1)[0] == 0
    assert run(capsys, "search-se", "--seed", EX / "seed_dim7.json", "--w-max", 64, "--ratio", 2,
               "--out", out2, "--workers", 2)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    ws = [(tuple(e["w"]), tuple(e["v"])) for e in map(json.loads, out1.read_text().splitlines())]
    assert ((49, 13), (49, 26)) in ws


def test_search_se_default_ledger_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SASJOIN_LEDGER_DIR", str(tmp_path))
    assert run(capsys, "search-se", "--seed", "dim7", "--w-max", 10, "--v-max", 2)[0] == 0
    assert (tmp_path / "ledger.jsonl").exists()


def test_search_se_bad_seed_exits_2(capsys):
    assert run(capsys, "search-se", "--seed", "dim99", "--w-max", 5, "--v-max", 2)[0] == 2


# topology and schemas -------------------------------------------------------------------------------------

def test_topology(capsys):
    code, out, _ = run(capsys, "topology", "--k", 4, "--format", "text")
    assert code == 0 and "H4 free rank: 2" in out
    code, out, _ = run(capsys, "topology", EX / "dim7_torsion.json")
    assert json.loads(out)["dim7_torsion"] == [3, 2]
    assert run(capsys, "topology", "--k", 1)[0] == 2


def test_schemas_are_valid_and_accept_examples(tmp_path, capsys):
    assert run(capsys, "schemas", "--out-dir", tmp_path)[0] == 0
    for name, schema in SCHEMAS.items():
        jsonschema.Draft202012Validator.check_schema(schema)
        assert json.loads((tmp_path / f"{name}.schema.json").read_text()) == schema
    v = jsonschema.Draft202012Validator
    for f in ["product_n2.json", "hirzebruch_a2.json", "malformed.json"]:
        v(SCHEMAS["orbifold"]).validate(json.loads((EX / f).read_text()))
    for f in ["y21.json", "missing_v.json", "dim9_t91.json", "dim7_torsion.json"]:
        v(SCHEMAS["tower"]).validate(json.loads((EX / f).read_text()))
    v(SCHEMAS["seed"]).validate(json.loads((EX / "seed_dim7.json").read_text()))


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "r.json"
    assert run(capsys, "bott-check", EX / "product_n2.json", "-o", dest)[0] == 0
    assert json.loads(dest.read_text())


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "sasjoin", "topology", "--k", "3"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["k"] == 3
