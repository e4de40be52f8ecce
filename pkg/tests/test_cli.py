import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from levy_inventory import cli
from levy_inventory.errors import ConvergenceError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, sigma=0.2, K=10.0, extra="", name="run.ini", **model):
    params = dict(delta_hat=0.1, sigma=sigma, alpha=3, beta=1, varpi=0.1)
    params.update(model)
    body = "[model]\ntype = beta\n" + "".join(f"{k} = {v}\n" for k, v in params.items()) + "lambda = 1.5\n"
    body += f"[cost]\nC = 10\nK = {K}\nq = 0.03\n"
    body += f"[output]\ndir = {tmp_path / 'out'}\nx_min = -3\nx_max = 3\nx_step = 0.5\n" + extra
    path = tmp_path / name
    path.write_text(body)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_writes_solution(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert cli.main(["solve", "--config", str(cfg)]) == 0
    rows = read_csv(tmp_path / "out" / "solution.csv")
    assert rows[0] == ["param", "s_star", "S_star", "a0", "residual_g", "residual_h"]
    s, S, a0 = (float(v) for v in rows[1][1:4])
    assert s < a0 < S
    assert s == pytest.approx(-1.6875241446009728, abs=1e-9)
    assert "s_star" in capsys.readouterr().out


def test_barrier_dispatch(tmp_path, capsys):
    cfg = write_config(tmp_path, K=0)
    assert cli.main(["solve", "--config", str(cfg)]) == 0
    row = read_csv(tmp_path / "out" / "solution.csv")[1]
    assert row[1] == "" and row[2] == ""
    assert "barrier a0" in capsys.readouterr().out


def test_value_csv(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "elsewhere"
    assert cli.main(["value", "--config", str(cfg), "--out", str(out), "--x-min", "-4", "--x-step", "0.25"]) == 0
    rows = read_csv(out / "value.csv")
    assert rows[0] == ["x", "v", "v_tilde", "region"]
    xs = np.array([float(r[0]) for r in rows[1:]])
    assert xs[0] == -4 and xs[-1] == 3 and len(xs) == 29
    regions = [r[3] for r in rows[1:]]
    assert regions[0] == "below_s" and regions[-1] == "above_S" and "between" in regions
    v = np.array([float(r[1]) for r in rows[1:]])
    vt = np.array([float(r[2]) for r in rows[1:]])
    assert np.allclose(vt - v, 10 * xs, rtol=1e-12, atol=1e-9)


def test_sweep_monotone_in_C(tmp_path):
    cfg = write_config(tmp_path, extra="[sweep]\nparam = C\nvalues = 0, 1, 5, 10\nx = -3, 0, 3\n")
    assert cli.main(["sweep", "--config", str(cfg)]) == 0
    rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert rows[0] == ["param", "value", "s_star", "S_star", "a0", "v_at_-3", "v_at_0", "v_at_3"]
    v = np.array([[float(c) for c in r[5:]] for r in rows[1:]])
    assert np.all(np.diff(v, axis=0) >= 0)


def test_sweep_needs_values(tmp_path):
    cfg = write_config(tmp_path)
    assert cli.main(["sweep", "--config", str(cfg)]) == 2


def test_check_passes_on_shipped_configs(capsys):
    for name in ("beta_sigma02.ini", "beta_sigma0.ini"):
        assert cli.main(["check", "--config", str(CONFIGS / name), "--out", "/tmp/unused"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "laplace identity" in out


def test_check_fails_with_too_few_terms(tmp_path, capsys):
    cfg = write_config(tmp_path, extra="[solver]\nn_terms = 2\n")
    assert cli.main(["check", "--config", str(cfg)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_config_errors(tmp_path, capsys):
    assert cli.main(["solve", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = write_config(tmp_path, sigma=0.0, delta_hat=-0.1)
    assert cli.main(["solve", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error\tconfig\t")
    partial = tmp_path / "partial.ini"
    partial.write_text("[model]\ntype = beta\n")
    assert cli.main(["solve", "--config", str(partial)]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise ConvergenceError("forced")

    monkeypatch.setattr(cli, "solve", boom)
    assert cli.main(["solve", "--config", str(write_config(tmp_path))]) == 3
    assert capsys.readouterr().err.startswith("error\tnumerical\t")


def test_simulate_is_byte_reproducible(tmp_path):
    sim = "[sim]\nn_paths = 200\nhorizon = 40\nseed = 5\n"
    cfg = write_config(tmp_path, extra=sim)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(b)]) == 0
    assert (a / "mc.csv").read_bytes() == (b / "mc.csv").read_bytes()
    header = read_csv(a / "mc.csv")[0]
    assert header[:5] == ["quantity", "estimate", "std_error", "analytic", "z_score"]
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(b), "--seed", "6"]) == 0
    assert (a / "mc.csv").read_bytes() != (b / "mc.csv").read_bytes()


def test_value_csv_is_reproducible(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["value", "--config", str(cfg), "--out", str(a)])
    cli.main(["value", "--config", str(cfg), "--out", str(b)])
    assert (a / "value.csv").read_bytes() == (b / "value.csv").read_bytes()


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path)
    res = subprocess.run([sys.executable, "-m", "levy_inventory", "solve", "--config", str(cfg)],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert "S_star" in res.stdout
