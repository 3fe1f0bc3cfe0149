import json

import pytest

from cliffsurf.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def catenoid(tmp_path, capsys):
    path = tmp_path / "cat.json"
    assert run(capsys, "generate", "--surface", "catenoid", "--nu", "48", "-o", str(path))[0] == 0
    return path


def test_generate_and_analyze(catenoid, capsys):
    code, out, _ = run(capsys, "analyze", "--input", str(catenoid))
    rep = json.loads(out)
    assert code == 0 and rep["pass"] is True
    for key in ("tool", "version", "config", "config_hash", "seed", "tolerances", "threads"):
        assert key in rep


def test_reports_are_deterministic(catenoid, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(capsys, "analyze", "--input", str(catenoid), "--report", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_conjugate_transform(catenoid, tmp_path, capsys):
    code, out, _ = run(capsys, "transform", "--kind", "conjugate", "--input", str(catenoid),
                       "-o", str(tmp_path / "h.json"))
    assert code == 0 and (tmp_path / "h.json").exists()


def test_failed_check_exits_two(tmp_path, capsys):
    path = tmp_path / "sphere.json"
    run(capsys, "generate", "--surface", "round_sphere", "--nu", "32", "-o", str(path))
    code, _, err = run(capsys, "transform", "--kind", "conjugate", "--input", str(path),
                       "-o", str(tmp_path / "x.json"))
    assert code == 2 and "NotMinimal" in err


def test_usage_and_io_errors_exit_one(tmp_path, capsys):
    assert run(capsys, "analyze", "--input", str(tmp_path / "missing.json"))[0] == 1
    assert run(capsys, "generate", "--surface", "nowhere", "-o", "x")[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "study", "--surface", "catenoid", "--check", "hopf", "--grids", "32,abc")[0] == 1


def test_degree_prints_integer(capsys):
    code, out, _ = run(capsys, "duality", "--op", "degree", "--genus", "2", "--r", "3")
    assert code == 0 and out.strip() == "2"


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("CLIFFSURF_THREADS", "0")
    assert run(capsys, "algebra-check", "--r", "2", "--trials", "5")[0] == 1
    monkeypatch.setenv("CLIFFSURF_THREADS", "1")
    code, out, _ = run(capsys, "algebra-check", "--r", "2", "--trials", "5")
    assert code == 0 and json.loads(out)["threads"] == 1


def test_connections_sweep_on_torus(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "connections", "--surface", "clifford_torus", "--grids", "32,64,128",
                       "--sweep", "circle", "--samples", "4", "--controls", "--csv", str(csv_path))
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "harmonic-compatible" and csv_path.exists()


def test_study_table_goes_to_stderr(capsys):
    code, out, err = run(capsys, "study", "--surface", "clifford_torus", "--check", "polar",
                         "--grids", "32,64,128")
    assert code == 0 and json.loads(out)["pass"] and "ratio" in err
