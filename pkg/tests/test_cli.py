import json

import jsonschema
import numpy as np
import pytest

from faddeev.cli import CURVES_SCHEMA, main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cfg2(tmp_path):
    p = tmp_path / "c2.json"
    p.write_text(json.dumps({"dimension": 2, "energy": 4.0,
                             "points": [{"z": [0, 0], "alpha": 5.0}, {"z": [0.5, 0], "alpha": 6.0}]}))
    return str(p)


def test_eval_free_wave(capsys):
    code, out, _ = _run(capsys, "eval", "--lambda", "1", "--energy", "4", "--x", "0.3", "0.7")
    assert code == 0
    obj = json.loads(out)
    assert obj["k"] == [2.0, 0.0]
    psi = obj["psi"]["re"] + 1j * obj["psi"]["im"]
    assert np.isclose(psi, np.exp(2j * 0.3))


def test_eval_all_inert(capsys, tmp_path):
    p = tmp_path / "z.json"
    p.write_text(json.dumps({"dimension": 2, "energy": 4.0, "points": [{"z": [0, 0], "alpha": 0.0}]}))
    code, out, _ = _run(capsys, "eval", "--config", str(p), "--lambda", "1", "--x", "0.3", "0.7")
    assert code == 0
    obj = json.loads(out)
    assert np.isclose(obj["psi"]["re"] + 1j * obj["psi"]["im"], np.exp(2j * 0.3))


def test_eval_with_config(capsys, cfg2):
    code, out, _ = _run(capsys, "eval", "--config", cfg2, "--lambda", "2+0.3i", "--x", "1", "1")
    assert code == 0
    obj = json.loads(out)
    assert obj["regime"] == "complex" and len(obj["C"]) == 2


def test_unknown_key_is_rejected(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"dimension": 2, "energy": 4.0, "points": [{"z": [0, 0], "alpha": 1}], "x": 1}))
    code, _, err = _run(capsys, "eval", "--config", str(p), "--lambda", "2", "--x", "1", "1")
    assert code == 2 and "invalid configuration" in err


def test_bad_inputs_exit_2(capsys, cfg2):
    assert _run(capsys, "figures", "7")[0] == 2
    assert _run(capsys, "eval", "--config", cfg2, "--x", "1", "1")[0] == 2  # no momentum
    assert _run(capsys, "eval", "--config", cfg2, "--lambda", "2", "--x", "1", "1", "1")[0] == 2
    assert _run(capsys, "eval", "--x", "0", "0", "--lambda", "0.5", "--energy", "-1")[0] == 2


def test_numerical_failure_exit_3(capsys, tmp_path):
    s = 1.1
    p = tmp_path / "sing.json"
    p.write_text(json.dumps({"dimension": 3, "energy": 4.0, "points": [{"z": [0, 0, 0], "alpha": 4 * np.pi / s}]}))
    code, _, err = _run(capsys, "eval", "--config", str(p), "--x", "1", "0", "0",
                        "--a-dir", "1", "0", "0", "--b-dir", "0", "1", "0", "--b-norm", str(s))
    assert code == 3 and "numerical failure" in err


def test_green_command(capsys):
    code, out, _ = _run(capsys, "green", "--energy", "4", "--x", "0.3", "0.7", "0.2", "--k-re", "2", "0", "0")
    assert code == 0
    obj = json.loads(out)
    R = np.sqrt(0.3 ** 2 + 0.7 ** 2 + 0.2 ** 2)
    ref = -np.exp(2j * R) / (4 * np.pi * R)
    assert np.isclose(obj["G"]["re"] + 1j * obj["G"]["im"], ref)


def test_curves_output_is_valid_and_deterministic(capsys, cfg2, tmp_path):
    args = ["--n-r", "40", "--n-theta", "60"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(capsys, "curves", "--config", cfg2, "--out", str(a), "--workers", "1", *args)[0] == 0
    assert _run(capsys, "figures", "1", "--out", str(b), "--workers", "2", *args)[0] == 0
    obj = json.loads(a.read_text())
    jsonschema.validate(obj, CURVES_SCHEMA)
    assert obj["preset"] is None
    other = json.loads(b.read_text())
    assert other["preset"] == 1 and other["curves"] == obj["curves"]
    c = tmp_path / "c.json"
    _run(capsys, "figures", "1", "--out", str(c), "--workers", "1", *args)
    assert c.read_bytes() == b.read_bytes()


def test_converge_csv(capsys, tmp_path):
    p = tmp_path / "c3.json"
    p.write_text(json.dumps({"dimension": 3, "energy": 4.0, "points": [{"z": [0, 0, 0], "alpha": 3.0}]}))
    code, out, _ = _run(capsys, "converge", "--config", str(p), "--a-dir", "1", "0", "0", "--b-dir", "0", "1", "0",
                        "--b-norm", "0.8", "--N", "25", "50", "100")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "N,err_abs,err_rel,excluded_flag" and len(lines) == 4


def test_verify_exit_codes(capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "reality", "--seed", "4")
    assert code == 0 and all(r["passed"] for r in json.loads(out))
    code, _, _ = _run(capsys, "verify", "--suite", "reality", "--seed", "4", "--tol-scale", "1e-40")
    assert code == 1


def test_verify_seed_is_deterministic(capsys):
    _, a, _ = _run(capsys, "verify", "--suite", "pointmass", "--seed", "9")
    _, b, _ = _run(capsys, "verify", "--suite", "pointmass", "--seed", "9")
    assert a == b


def test_workers_from_environment(monkeypatch):
    from faddeev.singularities import default_workers

    monkeypatch.setenv("FADDEEV_WORKERS", "3")
    assert default_workers() == 3
