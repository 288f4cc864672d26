import json
import subprocess
import sys

import pytest

from crqflow.cli import build_parser, main

NEG = """[run]
J = 6
[curvature]
kind = synthetic
regime = negative
qbar_constant = -1
[f]
constant = -1
monomials = 1 0 re 0.5
[u0]
monomials = 1 0 re 0.2
"""


@pytest.fixture(autouse=True)
def _cache(monkeypatch, tmp_path):
    monkeypatch.setenv("CRQFLOW_CACHE", str(tmp_path / "cache"))


def _run(tmp_path, scenario, text, *extra, name="out"):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text)
    out = tmp_path / name
    return main([scenario, "--config", str(cfg), "--out", str(out), *extra]), out


def _doc(path):
    return json.loads(path.read_text())


def test_parser_has_all_subcommands():
    ap = build_parser()
    for s in ("basis-check", "flow-run", "center", "ineq", "nm", "green"):
        ns = ap.parse_args([s, "--config", "c", "--out", "o", "--seed", "3", "--threads", "2"])
        assert ns.seed == 3 and ns.threads == 2


def test_flow_run_outputs(tmp_path):
    code, out = _run(tmp_path, "flow-run", NEG)
    assert code == 0
    s = _doc(out / "summary.json")
    assert s["converged"] and s["header"]["config_sha256"]
    assert abs(s["lambda"] - 1) < 1e-4
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("# config_sha256")
    fs = _doc(out / "final_state.json")
    assert "modes" in fs["u"]
    assert (tmp_path / "cache").is_dir()


def test_flow_run_is_deterministic(tmp_path):
    _, a = _run(tmp_path, "flow-run", NEG, name="a")
    _, b = _run(tmp_path, "flow-run", NEG, name="b")
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_exit_code_validation(tmp_path):
    code, _ = _run(tmp_path, "flow-run", NEG.replace("constant = -1", "constant = 1"))
    assert code == 2
    code, _ = _run(tmp_path, "nm", "[nm]\nm = 3\nN_max = 2\n")
    assert code == 2
    assert main(["flow-run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    assert main(["bogus"]) == 2


def test_exit_code_numerical_abort(tmp_path):
    text = NEG + "[flow]\nfixed_step = 40\nmax_time = 200\n"
    text = text.replace("1 0 re 0.2", "1 0 re 3.0")
    code, _ = _run(tmp_path, "flow-run", text)
    assert code == 3


def test_exit_code_non_convergence(tmp_path):
    code, out = _run(tmp_path, "flow-run", NEG + "[flow]\nmax_time = 0.5\n")
    assert code == 4
    assert not _doc(out / "summary.json")["converged"]


def test_basis_check(tmp_path):
    code, out = _run(tmp_path, "basis-check", "[run]\nJ = 4\n")
    assert code == 0
    d = _doc(out / "basis_check.json")
    assert d["status"] == "green" and d["eigen_exact"]
    assert abs(d["qprime_times_volume_relative_error"]) < 1e-10


def test_center(tmp_path):
    code, out = _run(tmp_path, "center", "[run]\nJ = 16\n[center]\nbubble_p = 1 0 0 0\nbubble_r = 3\n")
    assert code == 0
    d = _doc(out / "center.json")
    assert abs(d["r"] - 3) < 0.03 and d["residual"] < 1e-8


def test_ineq(tmp_path):
    text = "[run]\nJ = 6\n[ineq]\nsamples = 10\nbubble_J = 16\nradii = 1.5\nadams_radii = 1 2\n"
    code, out = _run(tmp_path, "ineq", text)
    assert code == 0
    d = _doc(out / "ineq.json")
    assert d["random_min_deficit"] > -1e-9
    assert (out / "adams.csv").exists() and (out / "beckner_onofri_random.csv").exists()


def test_nm_threads(tmp_path):
    code, out = _run(tmp_path, "nm", "[nm]\nm = 1\nN_max = 2\nstarts = 10\n", "--threads", "2")
    assert code == 0
    assert _doc(out / "nm.json")["minimal_N"] == {"1": 2}


def test_green(tmp_path):
    code, out = _run(tmp_path, "green", "[run]\nJ = 8\n[green]\npoints = 500\n")
    assert code == 0
    assert _doc(out / "green.json")["slope"] < 0


def test_console_module(tmp_path):
    cfg = tmp_path / "b.ini"
    cfg.write_text("[run]\nJ = 2\n")
    r = subprocess.run([sys.executable, "-m", "crqflow.cli", "basis-check", "--config", str(cfg),
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
