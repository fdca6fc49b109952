"""Command-line interface: config handling, artifacts, exit codes."""

import subprocess
import sys

import numpy as np
import pytest

from phamp.cli import (RunConfig, UsageError, build_config, main,
                       make_parser, read_config_file)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "cache").mkdir()
    return d


def run_cli(workdir, *argv):
    args = [a.replace("{W}", str(workdir)) for a in argv]
    return main(args)


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("model = rt\nnot.a.key = 1\n")
    with pytest.raises(UsageError):
        read_config_file(str(cfg))


def test_config_parsing_and_flag_override(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# comment\nmodel = synth\nsolver.L = 6\n"
                   "strobe.eps = 0.05\nstrobe.map = phase\n")
    args = make_parser().parse_args(
        ["strobe", "--config", str(cfg), "--eps", "-0.1"])
    rc = build_config(args)
    assert rc.model == "synth"
    assert rc.solver.L == 6
    assert rc.map_kind == "phase"
    assert rc.stim.eps == -0.1          # flag wins over file


def test_bad_value_exits_with_usage_code(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("solver.L = not-an-int\n")
    assert main(["solve", "--config", str(cfg)]) == 2
    assert "solver.L" in capsys.readouterr().err


def test_solve_writes_artifacts_and_manifest(workdir, capsys):
    rc = run_cli(workdir, "solve", "--model", "synth",
                 "--out", "{W}/out", "--cache", "{W}/cache")
    assert rc == 0
    out = workdir / "out"
    assert (out / "parameterization.json").exists()
    assert (out / "K.txt").exists()
    manifest = (out / "manifest.txt").read_text().splitlines()
    assert all(len(line.split()[0]) == 64 for line in manifest)  # sha256


def test_cache_reused_on_second_run(workdir, capsys):
    assert run_cli(workdir, "solve", "--model", "synth",
                   "--out", "{W}/out2", "--cache", "{W}/cache") == 0
    assert "[cache] reusing" in capsys.readouterr().out


def test_response_grid_format(workdir):
    assert run_cli(workdir, "response", "--model", "synth",
                   "--out", "{W}/resp", "--cache", "{W}/cache",
                   "--n-theta", "8") == 0
    lines = (workdir / "resp" / "response.txt").read_text().splitlines()
    assert lines[0] == "# N=8 dim=15"
    assert len([l for l in lines if not l.startswith("#")]) == 8


def test_strobe_output_is_deterministic(workdir):
    argv = ["strobe", "--model", "synth", "--cache", f"{workdir}/cache",
            "--map", "phase", "--eps", "0.05", "--v", "1,0,0",
            "--pulses", "2", "--ts", "0.01", "--tp", "2.7", "--iters", "3"]
    assert main(argv + ["--out", f"{workdir}/s1"]) == 0
    assert main(argv + ["--out", f"{workdir}/s2"]) == 0
    a = (workdir / "s1" / "strobe_phase.txt").read_bytes()
    b = (workdir / "s2" / "strobe_phase.txt").read_bytes()
    assert a == b


def test_console_script_usage_error_exit_code():
    proc = subprocess.run([sys.executable, "-m", "phamp.cli", "nonsense"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_run_config_validation():
    rc = RunConfig(model="nope")
    with pytest.raises(UsageError):
        rc.validate()
