"""End-to-end checks of the command line, run as a subprocess."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest


def run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "leafflow", *args], capture_output=True, text=True, cwd=cwd)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_help_and_unknown_command():
    r = run("--help")
    assert r.returncode == 0 and "analyze" in r.stdout
    assert run("frobnicate").returncode == 1
    assert run("analyze", "--preset", "linear").returncode == 1  # --c missing


def test_analyze_quadratic(tmp_path):
    r = run("analyze", "--preset", "quadratic", "--c", "0", "--out", str(tmp_path))
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "analyze.json").read_text())
    assert rep["leaf"]["topology"] == "Surface"
    assert (rep["leaf"]["genus"], rep["leaf"]["punctures"]) == (1, 1)
    red = rep["zones"]["red_z"]
    assert red[0] == pytest.approx(-0.77, abs=0.01) and red[1] == pytest.approx(-0.30, abs=0.01)
    assert [z["signature"] for z in rep["zones"]["zones"]] == ["Lorentzian", "Euclidean", "Lorentzian"]
    crit = sorted(v["c"] for v in rep["critical_values"])
    c = 2 * np.sqrt(3) / 9
    np.testing.assert_allclose(crit, [-c, c], rtol=1e-12)
    assert "2*sqrt(3)/9" in rep["critical_values_note"]


def test_analyze_linear_two_planes(tmp_path):
    r = run("analyze", "--preset", "linear", "--c", "-1", "--out", str(tmp_path))
    assert r.returncode == 0
    rep = json.loads((tmp_path / "analyze.json").read_text())
    assert rep["leaf"]["topology"] == "TwoPlanes" and rep["leaf"]["n_simple"] == 0
    assert [z["signature"] for z in rep["zones"]["zones"]] == ["Euclidean"]


def test_analyze_config_error_has_file_and_line(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "family": {"preset": "linear"},\n  "bogus": true\n}\n')
    r = run("analyze", "--config", str(cfg), "--c", "0")
    assert r.returncode == 1
    assert f"{cfg}:3:" in r.stderr


def test_verify_all_presets(tmp_path):
    r = run("verify", "--points", "200", "--seed", "4", "--out", str(tmp_path))
    assert r.returncode == 0, r.stdout + r.stderr
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["passed"] and len(rep["families"]) == 3
    names = {s["name"] for s in rep["families"][0]["suites"]}
    assert {"chain_identity", "closed_form", "casimir", "tangency", "gradient_identity", "sl2_oracle"} <= names
    assert "all suites passed" in r.stdout


def test_verify_usage_and_construction_errors(tmp_path):
    assert run("verify", "--points", "0").returncode == 1
    cfg = tmp_path / "c.json"
    cfg.write_text('{"family": {"custom": {"U": "3*z^2-1", "V": "0", "P": "z", "Q": "z^3-z"}}}')
    r = run("verify", "--config", str(cfg), "--out", str(tmp_path))
    assert r.returncode == 1
    assert "P' = V" in r.stderr
    assert not (tmp_path / "verify.json").exists()


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("verify", "--preset", "group", "--points", "50", "--seed", "9", "--out", str(d)).returncode == 0
    assert (a / "verify.json").read_bytes() == (b / "verify.json").read_bytes()


def test_flow_linear_z(tmp_path):
    r = run("flow", "--preset", "linear", "--c", "1.5", "--start", "1,1,1", "--G", "z", "--t-max", "2",
            "--out", str(tmp_path))
    assert r.returncode == 5, r.stderr  # reached t_max
    header, data = read_csv(tmp_path / "flow.csv")
    assert header == ["t", "x", "y", "z", "C", "G", "f"]
    v = (data[1, 1:4] - data[0, 1:4]) / data[1, 0]
    np.testing.assert_allclose(v, (-1, -1, 2), rtol=0.02)
    assert np.max(np.abs(data[:, 4] - 1.5)) < 1e-8
    ev = json.loads((tmp_path / "flow_events.json").read_text())
    assert ev["status"] == "TMax" and ev["events"] == []


def test_flow_of_casimir_converges_at_once(tmp_path):
    r = run("flow", "--preset", "linear", "--start", "1,1,1", "--G", "x*y + z^2/2", "--out", str(tmp_path))
    assert r.returncode == 0
    _, data = read_csv(tmp_path / "flow.csv")
    assert data.shape == (1, 7)
    ev = json.loads((tmp_path / "flow_events.json").read_text())
    assert ev["status"] == "Converged" and ev["events"][0]["t"] == 0.0


def test_flow_red_zone_exit(tmp_path):
    assert run("analyze", "--preset", "quadratic", "--c", "0", "--out", str(tmp_path)).returncode == 0
    red = json.loads((tmp_path / "analyze.json").read_text())["zones"]["red_z"]
    r = run("flow", "--preset", "quadratic", "--c", "0", "--start", "1,-0.0899,-0.1", "--G", "z",
            "--out", str(tmp_path))
    assert r.returncode == 1  # off the leaf c = 0 by about 1e-2
    assert "C(start)" in r.stderr
    # Q(-0.1) = 0.099, so the c = 0 leaf passes through (1, -0.099, -0.1), in the Lorentzian zone
    r = run("flow", "--preset", "quadratic", "--c", "0", "--start", "1,-0.099,-0.1", "--G", "z",
            "--out", str(tmp_path))
    assert r.returncode == 4, r.stdout + r.stderr
    ev = json.loads((tmp_path / "flow_events.json").read_text())
    last = ev["events"][-1]
    assert last["kind"] == "RedZoneApproach" and abs(last["value"]) < 1e-6
    assert last["point"][2] == pytest.approx(red[1], abs=1e-4)


def test_flow_errors(tmp_path):
    r = run("flow", "--preset", "linear", "--start", "1,1,1", "--G", "z +* 1", "--out", str(tmp_path))
    assert r.returncode == 1 and "offset 3" in r.stderr
    r = run("flow", "--preset", "linear", "--start", "1,1", "--G", "z", "--out", str(tmp_path))
    assert r.returncode == 1
    r = run("flow", "--preset", "linear", "--start", "1,1,1", "--G", "z", "--direction", "0")
    assert r.returncode == 1


def test_flow_numerical_abort(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"family": {"preset": "linear"}, "tolerances": {"casimir_tol": 1e-15}}')
    r = run("flow", "--config", str(cfg), "--start", "1,1,1", "--G", "z", "--method", "rk4", "--out", str(tmp_path))
    assert r.returncode == 3
    assert json.loads((tmp_path / "flow_events.json").read_text())["status"] == "CasimirDrift"


def test_flow_csv_is_bit_reproducible(tmp_path):
    outs = []
    for d in ("a", "b"):
        run("flow", "--preset", "group", "--start", "1,0.5,-0.4", "--G", "x+y", "--t-max", "1",
            "--out", str(tmp_path / d))
        outs.append((tmp_path / d / "flow.csv").read_bytes())
    assert outs[0] == outs[1]
    _, data = read_csv(tmp_path / "a" / "flow.csv")
    assert data.shape[0] > 2


def test_mesh_outputs(tmp_path):
    r = run("mesh", "--preset", "quadratic", "--c", "0", "--resolution", "20", "--out", str(tmp_path))
    assert r.returncode == 0, r.stderr
    for name in ("leaf", "red_zone"):
        text = (tmp_path / f"{name}.obj").read_text()
        assert text.startswith("v ")
        header, data = read_csv(tmp_path / f"{name}.csv")
        assert header == ["index", "X", "Y", "T", "x", "y", "z", "C", "f", "F_c", "signature"]
        assert text.count("\nv ") + 1 == len(data)
    _, leaf = read_csv(tmp_path / "leaf.csv")
    assert np.max(np.abs(leaf[:, 7])) < 1e-6
    _, red = read_csv(tmp_path / "red_zone.csv")
    assert np.max(np.abs(red[:, 8])) < 1e-6


def test_mesh_empty_leaf_warns(tmp_path):
    r = run("mesh", "--preset", "linear", "--c", "-100", "--resolution", "16", "--out", str(tmp_path))
    assert r.returncode == 0
    assert "warning" in r.stderr
    assert (tmp_path / "leaf.obj").read_text() == ""
    assert run("mesh", "--preset", "linear", "--c", "1", "--resolution", "8").returncode == 1


def test_brockett_n5(tmp_path):
    r = run("brockett", "--n", "5", "--out", str(tmp_path))
    assert r.returncode == 0
    assert "sorted like N: yes" in r.stdout
    header, data = read_csv(tmp_path / "brockett.csv")
    assert header == ["t", "offdiag", "eig_drift", "trace_LN"]
    assert data[-1, 1] < 1e-6 and np.max(data[:, 2]) < 1e-8


def test_brockett_matrix_file(tmp_path):
    (tmp_path / "ns.txt").write_text("1 2\n3 4\n")
    r = run("brockett", "--matrix", str(tmp_path / "ns.txt"), "--out", str(tmp_path))
    assert r.returncode == 1 and "not symmetric" in r.stderr
    (tmp_path / "d.txt").write_text("# diagonal input\n2, 0\n0, 1\n")
    r = run("brockett", "--matrix", str(tmp_path / "d.txt"), "--out", str(tmp_path))
    assert r.returncode == 0 and "steps 0" in r.stdout
    _, data = read_csv(tmp_path / "brockett.csv")
    assert data.shape == (1, 4)


def test_brockett_two_by_two_spectrum(tmp_path):
    r = run("brockett", "--spectrum=-1,4", "--N", "2,1", "--out", str(tmp_path))
    assert r.returncode == 0
    diag = [float(v) for v in r.stdout.split("[")[1].split("]")[0].split(",")]
    np.testing.assert_allclose(diag, [4, -1], atol=1e-6)
    assert run("brockett", "--n", "1").returncode == 1
