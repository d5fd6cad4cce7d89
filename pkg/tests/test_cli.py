import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from akmeter.cli import _threads, build_parser, main

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_seed_must_be_u64():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--scenario", "x.toml", "--seed", "-1"])


def test_run_example_scenarios(tmp_path, capsys):
    for path in sorted(SCEN.glob("*.toml")):
        assert main(["run", "--scenario", str(path), "--out", str(tmp_path / path.stem)]) == 0
        assert (tmp_path / path.stem / "report.json").exists()
        assert (tmp_path / path.stem / "rho.csv").exists()
    assert (tmp_path / "pred_opt_region" / "wigner_final.csv").exists()


def test_run_is_byte_identical(tmp_path):
    args = ["run", "--scenario", str(SCEN / "complete_opt_coherent.toml"), "--format", "json"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("report.json", "rho.json", "samples.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_failing_verdict_exit_code(tmp_path, capsys):
    # a wide region mixes many coherent states, so the preparation fidelity drops
    text = (SCEN / "pred_opt_region.toml").read_text().replace("width_x = 0.05", "width_x = 4.0").replace("width_p = 0.05", "width_p = 4.0")
    p = tmp_path / "wide.toml"
    p.write_text(text)
    assert main(["run", "--scenario", str(p)]) == 1
    err = capsys.readouterr().err
    assert "FAIL" in err and "coherent_preparation_fidelity" in err


def test_usage_errors(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "none.toml")]) == 2
    p = tmp_path / "bad.toml"
    p.write_text('[grid]\ndx = 0.1\n[system]\nkind = "coherent"\n')
    assert main(["run", "--scenario", str(p)]) == 2
    assert "error:" in capsys.readouterr().err


def test_sample_subcommand(tmp_path):
    args = ["sample", "--scenario", str(SCEN / "complete_opt_coherent.toml"), "--count", "5000", "--seed", "11"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "samples.csv").read_bytes()
    assert a == (tmp_path / "b" / "samples.csv").read_bytes()
    assert len(a.splitlines()) == 5001


def test_sample_needs_count(tmp_path):
    assert main(["sample", "--scenario", str(SCEN / "min_disturb_eta1.toml"), "--out", str(tmp_path)]) == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("AKMETER_THREADS", "1")
    assert _threads() == 1
    monkeypatch.setenv("AKMETER_THREADS", "100000")
    assert _threads() == (os.cpu_count() or 1)
    monkeypatch.setenv("AKMETER_THREADS", "junk")
    assert _threads() >= 1


def test_verify_subcommand(tmp_path):
    env = dict(os.environ, AKMETER_THREADS="2")
    out = subprocess.run(
        [sys.executable, "-m", "akmeter.cli", "verify", "--out", str(tmp_path)], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    d = json.loads((tmp_path / "verify.json").read_text())
    assert len(d["scenarios"]) == 20
    assert all(s["passed"] for s in d["scenarios"])
