import json
import subprocess
import sys

import pytest

from stablecones import __version__
from stablecones.cli import read_config, run, UsageError


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_verify_csv(capsys):
    assert run(["verify", "--s", "0.5"]) == 0
    text = capsys.readouterr().out
    lines = text.splitlines()
    assert lines[0].startswith("# tool: ")
    header = [l for l in lines if not l.startswith("#")][0]
    assert header.split(",")[:3] == ["identity", "s", "n"]


def test_failed_check_exit_code(capsys):
    assert run(["verify", "--s", "0.5", "--tol", "1e-300"]) == 1


def test_flap_json(capsys):
    assert run(["flap", "--s", "0.5", "--x", "-1.0", "--gamma", "0.5", "--format", "json"]) == 0
    d = out_json(capsys)
    assert d["command"] == "flap" and d["version"] == __version__
    assert d["result"][0]["value"] == pytest.approx(-0.5, rel=1e-6)


def test_firstvar(capsys):
    assert run(["firstvar", "--s", "0.5"]) == 0
    d = out_json(capsys)
    assert d["result"]["crossing_U0"] == pytest.approx(1.1284, rel=1e-3)


def test_usage_errors(tmp_path, capsys):
    assert run(["nonsense"]) == 2
    assert run(["flap", "--s", "1.5"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(["verify", "--config", str(bad)]) == 2
    assert run(["verify", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "stablecones:" in capsys.readouterr().err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\npaths = 3000\nbatch_size = 300\nseed = 4\nformat = json\neps_levels = 0.08, 0.04\n")
    parsed = read_config(cfg)
    assert parsed["eps_levels"] == (0.08, 0.04) and parsed["paths"] == 3000
    assert run(["wos", "3", "0.5", "--config", str(cfg), "--seed", "7"]) in (0, 1)
    d = out_json(capsys)
    assert d["config"]["paths"] == 3000 and d["config"]["seed"] == 7
    assert d["result"]["estimate"]["n_samples"] == 3000


def test_read_config_errors(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("paths 10\n")
    with pytest.raises(UsageError):
        read_config(p)
    p.write_text("paths = ten\n")
    with pytest.raises(UsageError):
        read_config(p)


def test_output_file_and_cache(tmp_path, capsys):
    out = tmp_path / "ap.json"
    args = ["aperture", "2", "0.5", "--cache-dir", str(tmp_path / "cache"), "-o", str(out)]
    assert run(args) == 0
    first = json.loads(out.read_text())
    assert run(args) == 0
    second = json.loads(out.read_text())
    assert not first["result"]["from_cache"] and second["result"]["from_cache"]
    assert second["result"]["beta"] == first["result"]["beta"]
    assert run(args + ["--no-cache"]) == 0
    assert not json.loads(out.read_text())["result"]["from_cache"]


def test_hardy2d(capsys):
    assert run(["hardy2d"]) == 0
    rows = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert rows[0] == "R,lhs,rhs" and len(rows) == 4


def test_stability_planar(capsys):
    assert run(["stability", "2", "0.5", "--paths", "3000", "--batch-size", "300"]) == 0
    cap = capsys.readouterr()
    d = json.loads(cap.out)
    assert d["result"]["m0"]["value"] == 0.0 and "note" in d["result"]
    assert "verdict:" in cap.err


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "stablecones.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == __version__
