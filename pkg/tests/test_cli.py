import json
import subprocess
import sys

import pytest

from temposync.cli import main
from temposync.dynamics import read_trajectory_csv
from temposync.graph import load_network
from temposync.greedy import StudyReport


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return p


def test_validate_vdp5(capsys, vdp5_file):
    code, out, _ = run(capsys, "validate", vdp5_file)
    assert code == 0 and "5 snapshots valid" in out


def test_validate_cycle(capsys, tmp_path):
    p = write(tmp_path, "cyc.json", {"num_nodes": 3, "tau": 1, "snapshots": [{"edges": [[1, 2]]}, {"edges": [[1, 2], [2, 1]]}]})
    code, out, _ = run(capsys, "validate", p)
    assert code == 1
    assert "snapshot 1: ok" in out and "1 -> 2 -> 1" in out


def test_validate_truncated(capsys, tmp_path, vdp5_file):
    p = write(tmp_path, "bad.json", vdp5_file.read_text()[:50])
    code, _, err = run(capsys, "validate", p)
    assert code == 2 and "not valid JSON" in err


def test_missing_file_and_bad_usage(capsys, tmp_path):
    assert run(capsys, "validate", tmp_path / "nope.json")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "greedy", "x.json")[0] == 2


def test_min_pin(capsys, vdp5_file, tmp_path):
    code, out, _ = run(capsys, "min-pin", vdp5_file, "--lp-out", tmp_path / "m.lp")
    assert code == 0 and out.strip() == "{1, 2}, size 2, LP agrees"
    assert (tmp_path / "m.lp").read_text().startswith("\\")
    code, out, _ = run(capsys, "min-pin", vdp5_file, "--target", "4")
    assert code == 0 and out.startswith("{1}, size 1")


def test_min_pin_edgeless(capsys, tmp_path):
    p = write(tmp_path, "e.json", {"num_nodes": 3, "tau": 1, "snapshots": [{"edges": []}]})
    code, out, _ = run(capsys, "min-pin", p)
    assert code == 0 and out.startswith("{1, 2, 3}, size 3")


def test_min_pin_bad_target(capsys, vdp5_file):
    assert run(capsys, "min-pin", vdp5_file, "--target", "9")[0] == 2
    assert run(capsys, "min-pin", vdp5_file, "--target", "a,b")[0] == 2


def test_analyze(capsys, vdp5_file):
    code, out, _ = run(capsys, "analyze", vdp5_file, "--pins", "1,2")
    assert code == 0 and "S_5 = {1, 2, 3, 4, 5}" in out and "theta budget: 0.5" in out
    code, out, _ = run(capsys, "analyze", vdp5_file, "--pins", "2")
    assert code == 1 and "NOT satisfied" in out
    code, out, _ = run(capsys, "analyze", vdp5_file)
    assert code == 0


@pytest.mark.parametrize("p, count", [(0, 0), (1, 2), (2, 5)])
def test_greedy(capsys, vdp5_file, p, count):
    code, out, _ = run(capsys, "greedy", vdp5_file, "--budget", p)
    assert code == 0 and f"synced count: {count}" in out


def test_greedy_oracle(capsys, vdp5_file):
    code, out, _ = run(capsys, "greedy", vdp5_file, "--budget", 1, "--oracle")
    assert code == 0 and "gap 1" in out
    code, out, _ = run(capsys, "greedy", vdp5_file, "--budget", 3, "--oracle", "--cap", 5)
    assert code == 1


def test_study(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, out, _ = run(capsys, "study", "--count", 6, "--nodes-min", 8, "--nodes-max", 10, "--seed", 4, "--out", a)
    assert code == 0 and "match rate:" in out
    run(capsys, "study", "--count", 6, "--nodes-min", 8, "--nodes-max", 10, "--seed", 4, "--out", b, "--jobs", 2)
    assert a.read_bytes() == b.read_bytes()
    rep = StudyReport.from_csv(a.read_text())
    assert len(rep.rows) == 6


def test_study_edgeless(capsys, tmp_path):
    code, out, _ = run(capsys, "study", "--count", 1, "--edge-prob", 0, "--out", tmp_path / "s.csv")
    assert code == 0 and "match rate: 1.0000" in out


def test_study_seed_from_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TEMPOSYNC_SEED", "9")
    run(capsys, "study", "--count", 3, "--nodes-min", 6, "--nodes-max", 8, "--out", tmp_path / "env.csv")
    run(capsys, "study", "--count", 3, "--nodes-min", 6, "--nodes-max", 8, "--seed", 9, "--out", tmp_path / "flag.csv")
    assert (tmp_path / "env.csv").read_text() == (tmp_path / "flag.csv").read_text()
    monkeypatch.setenv("TEMPOSYNC_SEED", "nine")
    assert run(capsys, "study", "--count", 1, "--out", tmp_path / "x.csv")[0] == 2


def test_study_errors(capsys, tmp_path):
    assert run(capsys, "study", "--count", 2, "--cap", 10, "--out", tmp_path / "s.csv")[0] == 1
    assert run(capsys, "study", "--nodes-min", 9, "--nodes-max", 3, "--out", tmp_path / "s.csv")[0] == 2


def test_gen_random(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "gen-random", "--nodes", 15, "--snapshots", 5, "--seed", 42, "--out", a)[0] == 0
    assert run(capsys, "gen-random", "--nodes", 15, "--snapshots", 5, "--seed", 42, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(capsys, "validate", a)
    assert code == 0 and "5 snapshots valid" in out
    e = tmp_path / "e.json"
    run(capsys, "gen-random", "--nodes", 6, "--edge-prob", 0, "--out", e)
    assert all(g.edges == () for g in load_network(e).snapshots)
    assert run(capsys, "gen-random", "--nodes", 4, "--out", tmp_path / "missing" / "x.json")[0] == 2
    assert run(capsys, "gen-random", "--nodes", 4, "--edge-prob", 2, "--out", tmp_path / "y.json")[0] == 2


def test_simulate_full(capsys, vdp5_file, tmp_path):
    out_csv = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "simulate", vdp5_file, "--pins", "1,2", "--c", 225, "--out", out_csv, "--expect-full", "--decimation", 500)
    assert code == 0
    assert out.count("(synced)") == 5
    header, data = read_trajectory_csv(out_csv)
    assert header[0] == "t" and header[-1] == "err_5"
    assert data[0, 0] == 0 and data[-1, 0] == pytest.approx(5.0)
    assert (data[-1, -5:] < 1e-2).all()


def test_simulate_single_pin(capsys, vdp5_file):
    code, out, _ = run(capsys, "simulate", vdp5_file, "--pins", "1", "--expect-full", "--decimation", 500)
    assert code == 1
    assert "above tolerance: {2, 3, 5}" in out


def test_simulate_uncoupled(capsys, vdp5_file):
    code, out, _ = run(capsys, "simulate", vdp5_file, "--pins", "1,2", "--c", 0, "--step", 1e-3)
    assert code == 0
    assert out.count("NOT synced") == 3


def test_simulate_errors(capsys, vdp5_file):
    assert run(capsys, "simulate", vdp5_file, "--pins", "7")[0] == 2
    assert run(capsys, "simulate", vdp5_file, "--pins", "1", "--step", 0.5)[0] == 2
    assert run(capsys, "simulate", vdp5_file, "--pins", "1", "--tau", 0)[0] == 2


def test_simulate_nonfinite(capsys, vdp5_file):
    # RK4 on the bare oscillator is unstable at this step size
    code, out, _ = run(capsys, "simulate", vdp5_file, "--pins", "1", "--c", 0, "--tau", 100, "--step", 0.5)
    assert code == 3 and "non-finite at t=" in out


def test_module_entry_point(vdp5_file):
    res = subprocess.run([sys.executable, "-m", "temposync", "validate", str(vdp5_file)], capture_output=True, text=True)
    assert res.returncode == 0 and "5 snapshots valid" in res.stdout
