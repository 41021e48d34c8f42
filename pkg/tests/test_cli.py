import csv
import io
import json
import os
import subprocess
import sys

import pytest

from cubecov.cli import build_parser


def run(*args, env=None):
    full_env = {k: v for k, v in os.environ.items() if k != "CUBECOV_SEED"}
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "cubecov", *map(str, args)],
                          capture_output=True, text=True, env=full_env)


def test_simulate_smoke():
    out = run("simulate", "--alg", "mv", "--d", 2, "--n", 9, "--a", 2, "--seed", 7)
    assert out.returncode == 0, out.stderr
    result = json.loads(out.stdout)
    assert result["branch"] == "direct" and result["cost"] > 0
    assert result["r"] == pytest.approx(1 / 6)
    assert out.stderr == ""


def test_lv_below_minimum_n():
    out = run("simulate", "--alg", "lv", "--d", 2, "--n", 10, "--a", 2)
    assert out.returncode == 1
    assert out.stdout == ""
    assert "ceil(x0) = 92" in out.stderr
    assert len(out.stderr.strip().splitlines()) == 1


def test_domain_errors_exit_one():
    assert run("simulate", "--alg", "mv", "--d", 2, "--n", 10, "--a", 2).returncode == 1
    assert run("simulate", "--alg", "lv", "--d", 2, "--n", 500, "--a", 2, "--f", 1.0).returncode == 1
    assert run("verify", "--placement", "/nonexistent.csv", "--r", 0.1).returncode == 1


@pytest.mark.parametrize("args", [
    ["simulate", "--alg", "mv", "--d", "2", "--n", "9", "--a", "2", "--bogus"],
    ["simulate", "--alg", "xx", "--d", "2", "--n", "9", "--a", "2"],
    ["simulate", "--alg", "mv", "--d", "2", "--n", "9", "--a", "2", "--seed", "-1"],
    ["verify", "--placement", "p.csv", "--r", "0.1", "--exact", "--samples", "10"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_two(args):
    assert run(*args).returncode == 2


@pytest.mark.parametrize("command", ["simulate", "analytic", "verify", "sweep"])
def test_help_documents_every_flag(command):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command").choices[command]
    out = run(command, "--help")
    assert out.returncode == 0
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in out.stdout
        if action.option_strings and action.dest != "help":
            assert action.help


def test_env_seed_default():
    base = ["simulate", "--alg", "mv", "--d", 2, "--n", 16, "--a", 1]
    by_env = run(*base, env={"CUBECOV_SEED": "99"})
    by_flag = run(*base, "--seed", 99)
    flag_wins = run(*base, "--seed", 99, env={"CUBECOV_SEED": "5"})
    assert json.loads(by_env.stdout) == json.loads(by_flag.stdout) == json.loads(flag_wins.stdout)
    assert json.loads(run(*base).stdout)["seed"] == 0


def test_simulate_outputs_feed_verify(tmp_path):
    final, log, initial = tmp_path / "final.csv", tmp_path / "log.csv", tmp_path / "init.csv"
    out = run("simulate", "--alg", "mv-general", "--d", 2, "--n", 20, "--a", 2, "--seed", 3,
              "--dump-final", final, "--dump-log", log, "--dump-placement", initial)
    res = json.loads(out.stdout)
    assert res["moved_sensors"] == 16
    assert log.read_text().splitlines()[0] == "sensor_id,phase,from_x1,from_x2,to_x1,to_x2,dist"
    exact = json.loads(run("verify", "--placement", final, "--r", repr(res["r"])).stdout)
    assert exact["covered"] is True
    sampled = json.loads(run("verify", "--placement", final, "--r", repr(res["r"]), "--samples", 5000,
                             "--seed", 1).stdout)
    assert sampled["covered"] is True
    shrunk = json.loads(run("verify", "--placement", final, "--r", 0.1).stdout)
    assert shrunk["covered"] is False and len(shrunk["witness"]) == 2


def test_end_to_end_mode():
    base = ["simulate", "--alg", "mv", "--d", 2, "--n", 16, "--a", 1, "--seed", 2]
    per = json.loads(run(*base).stdout)["cost"]
    e2e = json.loads(run(*base, "--mode", "end-to-end").stdout)["cost"]
    assert e2e <= per


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_analytic_outputs():
    out = run("analytic", "d-total", "--n", 2, "--a", 1)
    assert out.stdout.splitlines()[0] == "n,d,a,D_a,phase1,recursive_total,theory_const_ratio"
    row = _csv(out.stdout)[0]
    assert float(row["D_a"]) == pytest.approx(19 / 48, abs=1e-9)
    rec = _csv(run("analytic", "recursive", "--n", 3600, "--d", 2, "--a", 2).stdout)[0]
    assert float(rec["theory_const_ratio"]) == pytest.approx(1 / 6, rel=0.02)
    ph = _csv(run("analytic", "phase1", "--n", 9, "--d", 2, "--a", 1).stdout)[0]
    assert float(ph["phase1"]) > 0 and row["phase1"] == ""
    lv = _csv(run("analytic", "lv-constants", "--d", 2, "--a", 2).stdout)[0]
    assert float(lv["p"]) == 6.75 and float(lv["f_threshold"]) == pytest.approx(9.6962, abs=1e-4)
    assert run("analytic", "recursive", "--a", 2).returncode == 1


def test_sweep_is_byte_identical(tmp_path):
    args = ["sweep", "--alg", "mv", "--d", 2, "--a", 2, "--n-list", "2..8^2", "--trials", 4, "--repeats", 2,
            "--seed", 11]
    a = run(*args, "--out", tmp_path / "a.csv", "--jobs", 1)
    b = run(*args, "--out", tmp_path / "b.csv", "--jobs", 2)
    assert a.returncode == b.returncode == 0
    assert a.stdout == ""
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["algorithm"] == "MV" and meta["trials"] == 4
    streamed = run(*args, "--out", "-", "--jobs", 1)
    assert streamed.stdout == (tmp_path / "a.csv").read_text()


def test_sweep_rejects_invalid_n():
    out = run("sweep", "--alg", "mv", "--d", 2, "--a", 2, "--n-list", "4,10", "--out", "-")
    assert out.returncode == 1 and out.stdout == ""
