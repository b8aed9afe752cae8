from __future__ import annotations

import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from spawnnet.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from spawnnet.export import read_run


def _out(capsys) -> dict[str, str]:
    lines = capsys.readouterr().out.splitlines()
    return {line.split(" ", 1)[0]: line.split(" ", 1)[1] for line in lines if " " in line}


def test_simulate_ticks(tmp_path, capsys):
    assert main(["simulate", "--max-ticks", "16", "--out", str(tmp_path)]) == EXIT_OK
    printed = _out(capsys)
    assert printed["final_tick"] == "16"
    result = read_run(tmp_path)
    assert result.spawn_ticks(2) == [4, 8, 12, 16]
    assert (tmp_path / "network.dot").exists()


def test_simulate_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["simulate", "--max-ticks", "5", "--max-nodes", "5", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["simulate", "--max-ticks", "5"]) == EXIT_USAGE
    assert main(["simulate", "--max-ticks", "5", "--rounding", "nearest", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["simulate", "--max-nodes", "0", "--out", str(tmp_path)]) == EXIT_USAGE


def test_engines_give_identical_digests(tmp_path, capsys):
    digests = {}
    for engine in ("sweep", "event"):
        for rule in ("ceil", "floor"):
            out = tmp_path / f"{engine}-{rule}"
            args = ["simulate", "--max-ticks", "500", "--engine", engine, "--rounding", rule, "--out", str(out)]
            assert main(args) == EXIT_OK
            digests[engine, rule] = _out(capsys)["digest"]
    assert len(set(digests.values())) == 1


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_ticks": 12, "out": str(tmp_path / "run"), "engine": "sweep"}))
    assert main(["--config", str(cfg), "simulate"]) == EXIT_OK
    assert _out(capsys)["final_tick"] == "12"
    # flags win over the file
    assert main(["--config", str(cfg), "simulate", "--max-ticks", "9"]) == EXIT_OK
    assert _out(capsys)["final_tick"] == "9"


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["--config", str(bad), "simulate"]) == EXIT_USAGE
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"colour": "red"}))
    assert main(["--config", str(unknown), "simulate", "--max-ticks", "4"]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "nope.json"), "simulate"]) == EXIT_USAGE


def test_theory_table(tmp_path, capsys):
    assert main(["theory", "--max-q", "3", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "theory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["q"] for r in rows] == ["1", "2", "3"]
    assert Fraction(rows[0]["p_recursive"]).limit_denominator(100) == Fraction(3, 7)
    assert Fraction(rows[1]["p_recursive"]).limit_denominator(100) == Fraction(4, 21)
    assert float(rows[2]["p_recursive"]) == pytest.approx(0.103896, abs=1e-6)
    assert main(["theory", "--max-q", "0", "--out", str(tmp_path)]) == EXIT_USAGE


def test_theory_evolution(tmp_path, capsys):
    args = ["theory", "--max-q", "10", "--evolve-n", "5000", "--q-cap", "200", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    printed = _out(capsys)
    assert float(printed["p1"].split()[0]) == pytest.approx(3 / 7, abs=1e-3)
    with open(tmp_path / "master_trace.csv") as fh:
        trace = list(csv.DictReader(fh))
    assert int(trace[-1]["n"]) == 5000
    assert all(float(r["max_mass_drift"]) < 1e-12 for r in trace)


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_run")
    assert main(["simulate", "--max-nodes", "20000", "--out", str(path)]) == EXIT_OK
    return path


def test_analyze_is_deterministic(run_dir, tmp_path, capsys):
    for name in ("a", "b"):
        args = ["analyze", "--in", str(run_dir), "--out", str(tmp_path / name), "--seed", "5", "--window", "100:400"]
        assert main(args) == EXIT_OK
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert {"power_law", "zipf", "growth", "births", "degree_fractions"} <= set(report)
    assert report["births"]["window"]["window"] == [100, 400]


def test_analyze_subset(run_dir, tmp_path, capsys):
    assert main(["analyze", "--in", str(run_dir), "--out", str(tmp_path), "--zipf"]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert "zipf" in report and "growth" not in report and "power_law" not in report


def test_analyze_bad_window(run_dir, tmp_path):
    assert main(["analyze", "--in", str(run_dir), "--window", "9:3"]) == EXIT_USAGE


def test_compare_flags_head(run_dir, tmp_path, capsys):
    assert main(["compare", "--in", str(run_dir), "--max-q", "20", "--out", str(tmp_path / "c.csv")]) == EXIT_OK
    text = capsys.readouterr().out
    assert "DISCREPANCY" in text.splitlines()[0]
    with open(tmp_path / "c.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20
    assert rows[0]["discrepancy"] == "1"
    summary = json.loads((tmp_path / "c.json").read_text())
    assert 0 < summary["ks_empirical_vs_theory"] < 1


def test_runtime_errors(tmp_path):
    assert main(["analyze", "--in", str(tmp_path)]) == EXIT_RUNTIME
    assert main(["compare", "--in", str(tmp_path), "--max-q", "5"]) == EXIT_RUNTIME
    assert main(["compare", "--in", str(tmp_path)]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "spawnnet", "simulate", "--max-ticks", "8", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "final_tick 8" in proc.stdout
