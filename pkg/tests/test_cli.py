import json
import math
import os
import subprocess
import sys

import pytest

from sta_harmonic import cli, io
from sta_harmonic.trajectories import RejectedTrajectory

from conftest import BOUND_BASELINE_E0


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- design ------------------------------------------------------------------

def test_design_baseline_poly(capsys):
    code, out, _ = run(capsys, "design", "--f0-hz", "250", "--ff-hz", "0.25", "--tf-s", "0.002",
                       "--traj", "poly")
    assert code == 0
    columns, rows, trailer = io.parse_csv(out)
    assert out.splitlines()[0] == io.MAGIC
    assert columns == ["t", "s", "b", "bdot", "bddot", "omega2", "E_n", "dH_n"]
    assert len(rows) == 2001
    assert rows[-1][2] == pytest.approx(31.6228, abs=1e-4)
    assert rows[0][6] == pytest.approx(1.0, rel=1e-12)
    assert trailer[0][0] == "config"


def test_design_identity_is_constant(capsys):
    code, out, _ = run(capsys, "design", "--ff-hz", "250", "--samples", "101")
    _, rows, _ = io.parse_csv(out)
    assert code == 0 and len(rows) == 101
    for col in (2, 3, 4, 5, 6, 7):
        assert len({r[col] for r in rows}) == 1


def test_design_hybrid_json(capsys):
    code, out, _ = run(capsys, "design", "--traj", "hybrid", "--tau", "0.4", "--format", "json",
                       "--samples", "201")
    data = json.loads(out)
    assert code == 0
    assert len(data["rows"]) == 201
    assert data["config"]["tau"] == 0.4
    assert data["has_repulsive_interval"] is True
    b = [r[2] for r in data["rows"]]
    assert b[0] == pytest.approx(1.0) and b[-1] == pytest.approx(math.sqrt(1000), rel=1e-12)


# --- analyze -----------------------------------------------------------------

def test_analyze_poly(capsys):
    code, out, _ = run(capsys, "analyze", "--format", "json")
    rep = json.loads(out)
    assert code == 0
    assert rep["bound"] == pytest.approx(BOUND_BASELINE_E0, rel=1e-12)
    assert rep["avg_energy"] >= rep["bound"]
    assert rep["final_fidelity"] == pytest.approx(1.0, abs=1e-12)
    assert rep["roundtrip_passed"] is True


def test_analyze_qopt(capsys):
    code, out, _ = run(capsys, "analyze", "--traj", "qopt", "--format", "json")
    rep = json.loads(out)
    assert code == 0
    assert rep["final_fidelity"] < 1
    assert rep["roundtrip_passed"] is False


def test_analyze_identity(capsys):
    code, out, _ = run(capsys, "analyze", "--ff-hz", "250", "--format", "json")
    rep = json.loads(out)
    assert rep["avg_energy"] == pytest.approx(1.0, rel=1e-12)
    assert rep["avg_std"] == 0.0


def test_analyze_csv_excited_state(capsys):
    code, out, _ = run(capsys, "analyze", "--n", "2")
    columns, rows, _ = io.parse_csv(out)
    assert code == 0
    row = dict(zip(columns, rows[0]))
    assert math.isnan(row["aa_lower_bound"])
    assert row["bound"] == pytest.approx(5 * BOUND_BASELINE_E0, rel=1e-12)


def test_units_raw_equals_e0_times_half_omega0(capsys):
    _, e0_out, _ = run(capsys, "analyze", "--format", "json")
    _, raw_out, _ = run(capsys, "analyze", "--format", "json", "--units", "raw")
    e0, raw = json.loads(e0_out), json.loads(raw_out)
    half_w0 = math.pi * 250.0
    for key in ("avg_energy", "max_energy", "bound", "bound_asymptotic", "avg_std",
                "aa_lower_bound", "reduced_energy"):
        assert raw[key] == pytest.approx(e0[key] * half_w0, rel=1e-12)

    _, d0, _ = run(capsys, "design", "--samples", "101")
    _, dr, _ = run(capsys, "design", "--samples", "101", "--units", "raw")
    rows0, rowsr = io.parse_csv(d0)[1], io.parse_csv(dr)[1]
    for a, b in zip(rows0, rowsr):
        assert b[6] == pytest.approx(a[6] * half_w0, rel=1e-12)
        assert b[7] == pytest.approx(a[7] * half_w0, rel=1e-12, abs=1e-300)


def test_angular_flag(capsys):
    _, hz, _ = run(capsys, "analyze", "--format", "json")
    w0, wf = 2 * math.pi * 250, 2 * math.pi * 0.25
    _, ang, _ = run(capsys, "analyze", "--format", "json", "--angular",
                    "--f0-hz", repr(w0), "--ff-hz", repr(wf))
    assert json.loads(ang)["bound"] == pytest.approx(json.loads(hz)["bound"], rel=1e-14)


# --- scan / otto -------------------------------------------------------------

def test_scan_tf_fits(capsys):
    code, out, _ = run(capsys, "scan", "--axis", "tf")
    result = io.scan_from_csv(out)
    assert code == 0
    assert result.fits["bound"].exponent == pytest.approx(-2, abs=0.05)
    assert result.fits["poly_std"].exponent == pytest.approx(-2, abs=0.05)
    assert result.config["axis"] == "tf"
    assert "# fit " in out and "# config " in out


def test_scan_wf_aa_column(capsys):
    code, out, _ = run(capsys, "scan", "--axis", "wf")
    result = io.scan_from_csv(out)
    assert code == 0
    assert result.fits["aa_bound"].exponent == pytest.approx(0.0, abs=0.05)
    assert result.fits["poly_energy"].exponent == pytest.approx(-1.0, abs=0.05)


def test_scan_tau(capsys):
    code, out, _ = run(capsys, "scan", "--axis", "tau", "--points", "5")
    result = io.scan_from_csv(out)
    assert code == 0
    assert result.columns == ["total", "caps", "central", "bound", "poly"]
    assert len(result.rows) == 5


def test_scan_fig1_json(capsys):
    code, out, _ = run(capsys, "scan", "--axis", "fig1", "--points", "4", "--format", "json")
    grid = json.loads(out)
    assert code == 0
    assert len(grid["tf"]) == 4 and len(grid["bound"]) == 4 and len(grid["bound"][0]) == 4


def test_scan_raw_units(capsys):
    _, e0, _ = run(capsys, "scan", "--axis", "tf", "--points", "4")
    _, raw, _ = run(capsys, "scan", "--axis", "tf", "--points", "4", "--units", "raw")
    a, b = io.scan_from_csv(e0), io.scan_from_csv(raw)
    for (x, qa), (_, qb) in zip(a.rows, b.rows):
        for c in qa:
            assert qb[c] == pytest.approx(qa[c] * math.pi * 250, rel=1e-12)


@pytest.mark.parametrize("args,expect", [
    (["--law", "budget", "--budget", "50"], 1.5),
    (["--law", "bang-bang"], 1.5),
    (["--law", "power", "--power", "-1"], 2.0),
])
def test_otto(capsys, args, expect):
    code, out, _ = run(capsys, "otto", *args)
    result = io.scan_from_csv(out)
    assert code == 0
    assert result.columns == ["tf", "R"]
    assert result.fits["R"].exponent == pytest.approx(expect, abs=0.01)


# --- verify ------------------------------------------------------------------

def test_verify_poly(capsys):
    code, out, err = run(capsys, "verify", "--samples", "201")
    report = json.loads(out)
    assert code == 0 and report["passed"]
    names = {c["name"] for c in report["checks"]}
    assert {"ermakov_roundtrip", "variance_oracle", "bang_bang_constant_energy"} <= names
    assert "FAIL" not in err.replace("XFAIL", "")


def test_verify_qopt_expected_failure(capsys):
    code, out, err = run(capsys, "verify", "--traj", "qopt")
    report = json.loads(out)
    assert code == 0
    rt = next(c for c in report["checks"] if c["name"] == "ermakov_roundtrip")
    assert rt["passed"] is False and rt["expected"] is False
    assert "XFAIL" in err and "expected" in err


def test_verify_bang_bang_check(capsys):
    _, out, _ = run(capsys, "verify")
    checks = {c["name"]: c for c in json.loads(out)["checks"]}
    assert checks["bang_bang_constant_energy"]["passed"]
    assert checks["bang_bang_endpoint"]["passed"]


def test_verify_failure_exit_code(capsys, monkeypatch):
    from sta_harmonic import verifier
    real = verifier.roundtrip_check

    def broken(spec, traj, tol=1e-6, samples=201):
        rep = real(spec, traj, tol, samples)
        return type(rep)(rep.residual_b, 1.0, rep.max_rel_deviation, False, tol)

    monkeypatch.setattr(verifier, "roundtrip_check", broken)
    code, out, err = run(capsys, "verify")
    assert code == 4
    assert json.loads(out)["passed"] is False
    assert "FAIL  ermakov_roundtrip" in err


# --- errors ------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["design", "--f0-hz", "-1"],
    ["design", "--traj", "hybrid"],
    ["design", "--traj", "hybrid", "--tau", "0.7"],
    ["design", "--tau", "0.2"],
    ["design", "--samples", "50"],
    ["scan", "--axis", "energy"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 2


def test_value_errors_map_to_usage(capsys):
    code, _, err = run(capsys, "otto", "--law", "budget")
    assert code == 2 and "budget" in err
    code, _, _ = run(capsys, "otto", "--law", "bang-bang", "--range", "1", "300")
    assert code == 2


def test_rejected_trajectory_exit_code(capsys, monkeypatch):
    def reject(*_a, **_k):
        raise RejectedTrajectory("b <= 0 near t=0.001")

    monkeypatch.setattr(cli, "make_trajectory", reject)
    code, _, err = run(capsys, "design")
    assert code == 3 and "rejected" in err


# --- files, determinism, round-trip ------------------------------------------

def test_out_is_written_atomically(tmp_path, capsys):
    target = tmp_path / "design.csv"
    target.write_text("old contents\n")
    code, out, _ = run(capsys, "design", "--samples", "101", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith(io.MAGIC)
    assert sorted(os.listdir(tmp_path)) == ["design.csv"]


def test_failed_write_leaves_no_temp_file(tmp_path):
    target = tmp_path / "x.csv"
    with pytest.raises(TypeError):
        io.write_text(None, str(target))
    assert os.listdir(tmp_path) == []


@pytest.mark.parametrize("argv", [
    ["design", "--samples", "301"],
    ["analyze"],
    ["scan", "--axis", "tf", "--points", "8"],
    ["scan", "--axis", "tau", "--points", "4"],
    ["scan", "--axis", "fig1", "--points", "3"],
    ["otto", "--law", "budget", "--budget", "20"],
])
def test_outputs_are_byte_identical_and_reparse(tmp_path, argv):
    files = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        assert cli.main([*argv, "--out", str(path)]) == 0
        files.append(path.read_bytes())
    assert files[0] == files[1]
    text = files[0].decode()
    columns, rows, _ = io.parse_csv(text)
    assert all(len(r) == len(columns) for r in rows)
    if argv[0] in ("scan", "otto") and argv[2] != "fig1":
        assert io.scan_to_csv(io.scan_from_csv(text)) == text
    if argv[0] == "scan" and argv[2] == "fig1":
        assert io.grid_to_csv(io.grid_from_csv(text)) == text


def test_scan_round_trip_exact_fields(capsys):
    from sta_harmonic.verifier import hybrid_tau_scan
    from sta_harmonic.trajectories import ExpansionSpec

    original = hybrid_tau_scan(ExpansionSpec.from_hz(250, 0.25, 0.002), [0.05, 0.1, 0.2])
    original.config = {"axis": "tau"}
    again = io.scan_from_csv(io.scan_to_csv(original))
    assert again == original
    assert io.scan_from_dict(json.loads(io.to_json(io.scan_to_dict(original)))) == original


def test_module_entry_point_subprocess(tmp_path):
    path = tmp_path / "a.json"
    proc = subprocess.run([sys.executable, "-m", "sta_harmonic", "analyze", "--format", "json",
                           "--out", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(path.read_text())["bound"] == pytest.approx(BOUND_BASELINE_E0, rel=1e-12)
    proc = subprocess.run([sys.executable, "-m", "sta_harmonic", "design", "--tau", "0.3"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "sta_harmonic", "--version"],
                          capture_output=True, text=True)
    assert proc.stdout.strip().startswith("sta-harmonic ")
