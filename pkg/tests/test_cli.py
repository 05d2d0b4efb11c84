import json
import subprocess
import sys
from pathlib import Path

import pytest

from agnostic_erm.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_analyze_example5_writes_certificate(tmp_path, capsys):
    code, out = _run(capsys, "analyze", "--class", "Example5", "--center", "h*_1", "--target", "5",
                     "--start", "1", "--out", str(tmp_path))
    assert code == 0
    rec = json.loads((tmp_path / "certificate.json").read_text())
    assert rec["schema_version"] == 1 and rec["found"] and rec["verifier_errors"] == []
    assert len(rec["certificate"]["steps"]) == 5


def test_analyze_vc_mode(capsys):
    code, out = _run(capsys, "analyze", "--class", '{"kind": "PowersetUnion", "max_block": 4}',
                     "--mode", "vc", "--target", "6", "--max-prefix", "31", "--max-instance", "10")
    assert code == 0 and json.loads(out)["result"]["value"] == 4


def test_simulate_rejects_zero_reps(capsys):
    code, out = _run(capsys, "simulate", "--config", str(CONFIGS / "finite_gap.json"), "--reps", "0")
    assert code != 0
    rec = json.loads(out)
    assert rec["status"] == "error" and rec["schema_version"] == 1


def test_bad_config_is_an_error_record(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    code, out = _run(capsys, "simulate", "--config", str(bad))
    assert code == 2 and json.loads(out)["status"] == "error"


def test_simulate_is_deterministic(tmp_path, capsys):
    args = ["simulate", "--config", str(CONFIGS / "finite_gap.json"), "--reps", "200", "--grid", "2,4,8"]
    _run(capsys, *args, "--out", str(tmp_path / "a"))
    _run(capsys, *args, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "curve.csv").read_bytes()
    assert a == (tmp_path / "b" / "curve.csv").read_bytes()
    code, out = _run(capsys, "classify", "--curve", str(tmp_path / "a" / "curve.csv"))
    assert code == 2  # three points are not enough to classify


def test_pipeline_construct_simulate_checkpoints(tmp_path, capsys):
    cfg = str(CONFIGS / "eluder_inverse_log.json")
    code, _ = _run(capsys, "construct", "--config", cfg, "--out", str(tmp_path))
    assert code == 0
    dump = tmp_path / "construction.json"
    con = json.loads(dump.read_text())
    assert con["passed"] and len(con["checkpoints"]) == 3
    grid = ",".join(str(c["n"]) for c in con["checkpoints"])
    code, _ = _run(capsys, "simulate", "--config", cfg, "--construction", str(dump), "--grid", grid,
                   "--reps", "300", "--out", str(tmp_path / "sim"))
    assert code == 0
    code, out = _run(capsys, "checkpoints", "--config", cfg, "--construction", str(dump),
                     "--curve", str(tmp_path / "sim" / "curve.csv"), "--reps", "300")
    rep = json.loads(out)
    assert len(rep["rows"]) == 3
    code, out = _run(capsys, "checkpoints", "--config", cfg, "--construction", str(dump), "--reps", "300")
    assert len(json.loads(out)["rows"]) == 3


def test_construction_roundtrip_same_verdicts(tmp_path, capsys):
    cfg = str(CONFIGS / "vc_eluder_power.json")
    _run(capsys, "construct", "--config", cfg, "--out", str(tmp_path / "a"))
    _run(capsys, "construct", "--config", cfg, "--construction", str(tmp_path / "a" / "construction.json"),
         "--out", str(tmp_path / "b"))
    a = json.loads((tmp_path / "a" / "construction.json").read_text())
    b = json.loads((tmp_path / "b" / "construction.json").read_text())
    assert [c["passed"] for c in a["verification"]] == [c["passed"] for c in b["verification"]]
    assert a["support"] == b["support"]


def test_bounds_subcommand(capsys):
    code, out = _run(capsys, "bounds", "hoeffding", "--param", "n=100", "--param", "t=0.1", "--json")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.2706705664732254)
    code, out = _run(capsys, "bounds", "nope")
    assert code == 2
    code, out = _run(capsys, "bounds", "slud_lower", "--param", "n=10", "--param", "eps=2")
    assert code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "agnostic_erm", "bounds", "finite_class_bound",
                        "--param", "m=3", "--param", "eps0=0.2", "--param", "n=500"],
                       capture_output=True, text=True, check=True)
    assert "finite_class_bound=0.000272" in r.stdout


def test_int_like_accepts_exact_scientific_notation():
    import argparse

    from agnostic_erm.cli import _int_like
    assert _int_like("1e15") == 10 ** 15
    assert _int_like("42") == 42
    with pytest.raises(argparse.ArgumentTypeError):
        _int_like("1.5")
