import json
import subprocess
import sys

import pytest

from stochwave.cli import kernel_selftest, main


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("nx = 32\nT = 0.5\nn_paths = 6\nalpha_list = 0.5, 4.0\n"
                 "u0 = 0.2\n")
    return p


def run(*args):
    return main([str(a) for a in args])


def test_sweep(cfg, tmp_path):
    out, paths = tmp_path / "s.csv", tmp_path / "p.csv"
    assert run("sweep", "--config", cfg, "--out", out, "--workers", 1,
               "--paths-out", paths) == 0
    assert out.read_text().count("\n") == 3
    assert paths.read_text().count("\n") == 13


def test_sweep_deterministic(cfg, tmp_path):
    for name in ("a", "b"):
        run("sweep", "--config", cfg, "--out", tmp_path / name, "--workers", 2)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_overrides(cfg, tmp_path):
    out = tmp_path / "s.json"
    assert run("sweep", "--config", cfg, "--out", out, "--format", "json",
               "--alpha-list", "1.5", "--seed", 40, "--workers", 1) == 0
    rows = json.loads(out.read_text())
    assert [r["alpha"] for r in rows] == [1.5]


@pytest.mark.parametrize("extra", [["--alpha-list", "0.5,x"],
                                   ["--alpha-list", "-1"],
                                   ["--seed", "-3"],
                                   ["--workers", "0"]])
def test_config_errors_exit_2(cfg, tmp_path, extra):
    assert run("sweep", "--config", cfg, "--out", tmp_path / "o", *extra) == 2


def test_bad_file_exit_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nx = 3\n")
    assert run("simulate", "--config", bad) == 2
    assert run("simulate", "--config", tmp_path / "missing.cfg") == 2


def test_numerical_failure_exit_3(tmp_path):
    c = tmp_path / "blow.cfg"
    c.write_text("nx = 16\nT = 1\nn_paths = 2\nalpha_list = 300\nu0 = 0.01\n")
    assert run("sweep", "--config", c, "--out", tmp_path / "o.csv",
               "--workers", 1) == 3
    assert (tmp_path / "o.csv").exists()  # results are kept for inspection


def test_simulate(cfg, tmp_path):
    out = tmp_path / "f.csv"
    assert run("simulate", "--config", cfg, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:2] == ["t", "x0"]
    assert len(lines[0].split(",")) == 33
    assert run("simulate", "--config", cfg, "--out", tmp_path / "f.json",
               "--format", "json") == 0
    assert json.loads((tmp_path / "f.json").read_text())["dx"] == 1 / 32


def test_refine(cfg, tmp_path):
    out = tmp_path / "r.csv"
    assert run("refine", "--config", cfg, "--out", out, "--levels", 2) == 0
    assert out.read_text().startswith("nx,n_paths,n_hit")


def test_holder(tmp_path):
    c = tmp_path / "h.cfg"
    c.write_text("nx = 128\nT = 1\nn_paths = 4\n")
    assert run("holder", "--config", c, "--out", tmp_path / "h.json") == 0
    rep = json.loads((tmp_path / "h.json").read_text())
    assert set(rep) == {"time", "space"}
    assert run("holder", "--config", tmp_path / "h.cfg", "--out",
               tmp_path / "h2.json", "--seed", 1) == 0


def test_holder_too_coarse(cfg, tmp_path):
    assert run("holder", "--config", cfg, "--out", tmp_path / "h.json") == 2


def test_girsanov_check(cfg, tmp_path):
    out = tmp_path / "g.json"
    assert run("girsanov-check", "--config", cfg, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["n_paths"] == 6 and rep["K"] == 1.0


def test_diagnose(tmp_path):
    c = tmp_path / "d.cfg"
    c.write_text("nx = 32\nT = 0.5\nalpha = 4.0\nu0 = 0.2\n")
    out = tmp_path / "d.json"
    assert run("diagnose", "--config", c, "--out", out) == 0
    names = [r["diagnostic"] for r in json.loads(out.read_text())]
    assert names == ["cone_monotonicity", "dyadic", "sector"]


def test_kernel_selftest():
    assert all(ok for _, ok, _ in kernel_selftest())
    assert run("kernel-selftest") == 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "stochwave", "kernel-selftest"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "FAIL" not in r.stdout
