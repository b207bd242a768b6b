import json
import subprocess
import sys

import numpy as np
import pytest

from annulus_dilation import acceptance, cli
from annulus_dilation.matrixio import save_matrix

R = 0.5


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, a in {
        "boundary": np.diag([R, 1 / R]),
        "eye": np.eye(2),
        "contraction": np.array([[0.3, 0.1], [0.0, 0.2]]),
        "other": np.array([[0.2, 0.0], [0.1, 0.1]]),
        "diag": np.diag([0.3, 0.5]),
        "big": np.diag([3.0, 1.0]),
    }.items():
        paths[name] = tmp_path / f"{name}.json"
        save_matrix(paths[name], a)
    paths["zeros"] = tmp_path / "zeros.json"
    paths["zeros"].write_text(json.dumps([[0.6, 0.2], 0.5 / np.hypot(0.6, 0.2)]))
    paths["points"] = tmp_path / "points.json"
    paths["points"].write_text(json.dumps([0.7, [0.6, 0.3]]))
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text('{"rows": 2, "cols": 2, "re": [[1, 2]]}')
    return paths


def test_membership_boundary_element(capsys, files):
    code, out, _ = run(capsys, "membership", "--matrix", files["boundary"], "--r", R)
    assert code == 0
    rep = json.loads(out)
    flags = rep["flags"]
    assert flags["QA"] and flags["scriptQA"] and flags["scriptPA"] and flags["scriptSA"]
    assert rep["passed"] and rep["seed"] == 7 and len(rep["config_hash"]) > 8


def test_dilate_annulus_identity(capsys, files):
    code, out, _ = run(capsys, "dilate-annulus", "--matrix", files["eye"], "--modes", 32, "--grid", 1024)
    assert code == 0
    assert json.loads(out)["failed"] == []


def test_disc_row_dc(capsys, files):
    assert run(capsys, "dilate-disc", "--matrix", files["contraction"], "--modes", 16, "--grid", 512)[0] == 0
    assert run(capsys, "dilate-row", "--matrix", files["contraction"], "--matrix", files["other"],
               "--modes", 8, "--grid", 256, "--ell", 3)[0] == 0
    assert run(capsys, "dilate-dc", "--matrix", files["diag"], "--matrix", files["diag"],
               "--modes", 8, "--grid", 256)[0] == 0


def test_input_errors(capsys, files, tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-verb"])
    assert exc.value.code == 2
    assert run(capsys, "membership", "--matrix", files["bad"])[0] == 2
    assert run(capsys, "membership", "--matrix", tmp_path / "missing.json")[0] == 2
    assert run(capsys, "dilate-disc", "--matrix", files["eye"])[0] == 2  # not a strict contraction
    assert run(capsys, "dilate-dc", "--matrix", files["contraction"], "--matrix", files["other"])[0] == 2
    assert run(capsys, "dilate-annulus", "--matrix", files["big"])[0] == 2
    assert run(capsys, "dilate-annulus", "--matrix", files["eye"], "--modes", 300, "--grid", 1024)[0] == 2
    assert run(capsys, "membership", "--matrix", files["eye"], "--r", 1.5)[0] == 2
    assert run(capsys, "membership", "--matrix", files["eye"], "--tol", 0)[0] == 2
    assert run(capsys, "verify", "--only", "9")[0] == 2


def test_config_file_overrides(capsys, files, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"modes": 16, "grid": 512}))
    code, out, _ = run(capsys, "dilate-disc", "--matrix", files["contraction"], "--config", cfg, "--modes", 64)
    assert code == 0
    rep = json.loads(out)
    assert rep["config"]["modes"] == 16 and rep["report"]["N"] == 16
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(capsys, "dilate-disc", "--matrix", files["contraction"], "--config", cfg)[0] == 2


def test_reports_are_byte_identical(capsys, files, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"rep{i}.json"
        assert run(capsys, "dilate-annulus", "--matrix", files["eye"], "--modes", 16, "--grid", 512, "--out", path)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_annulus_map_csv(capsys):
    code, out, _ = run(capsys, "annulus-map", "--r", R, "--lambda", 1.2, "--samples", 64)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "theta,re,im,modulus,arc"
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 64
    for row in rows:
        mod = float(row[3])
        if row[4] == "inner":
            assert abs(mod - R) <= 1e-8
        elif row[4] == "outer":
            assert abs(mod - 1 / R) <= 1e-8


def test_inner_eval_and_table(capsys, files):
    code, out, _ = run(capsys, "inner", "eval", "--q", 0.5, "--zeros", files["zeros"], "--at", files["points"])
    assert code == 0
    rep = json.loads(out)
    assert len(rep["values"]) == 2 and rep["spec"]["k"] == 1
    code, out, _ = run(capsys, "inner", "table", "--q", 0.5, "--zeros", files["zeros"], "--circle", "inner",
                       "--samples", 16)
    assert code == 0
    mods = [float(l.split(",")[3]) for l in out.strip().splitlines()[1:]]
    assert max(abs(m - 1) for m in mods) <= 1e-6
    assert run(capsys, "inner", "eval", "--q", 0.5, "--zeros", files["zeros"])[0] == 2


def test_kappa_json_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "evals.csv"
    code, out, _ = run(capsys, "kappa", "--budget", 120, "--dims", "2,4", "--csv", csv_path)
    assert code == 0
    rep = json.loads(out)
    assert rep["certificate"]["value"] <= rep["upper_bound"] + 1e-6
    assert len(csv_path.read_text().splitlines()) == rep["evaluations"] + 1


def test_verify_named_failure(capsys, monkeypatch):
    def broken(quick=False, seed=0):
        return acceptance.CriterionResult(6, "dilation extremality", False, {"reduction": 1.0}, {}, 0.0,
                                          ["reduction residual 1 > 1e-10"])

    monkeypatch.setitem(acceptance.CRITERIA, 6, broken)
    code, out, err = run(capsys, "verify", "--quick", "--only", "1,6")
    assert code == 1
    rep = json.loads(out)
    assert rep["failed"] == [6]
    assert "[FAIL] criterion 6" in err and "[PASS] criterion 1" in err


def test_console_script_unknown_verb():
    proc = subprocess.run([sys.executable, "-m", "annulus_dilation.cli", "frobnicate"], capture_output=True)
    assert proc.returncode == 2
