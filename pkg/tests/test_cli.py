import io
import subprocess
import sys

import numpy as np
import pytest

from platoon_nash import __version__, cli
from platoon_nash.general_game import solve_general
from platoon_nash.oracle import corrupted


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out)
    return code, out.getvalue()


def test_simulate_writes_csv_and_plot_data(tmp_path):
    target = tmp_path / "pf.csv"
    code, text = run("simulate", "pf_s1", "--out", str(target))
    assert code == 0
    assert "solver: pf" in text
    data = np.loadtxt(target, delimiter=",", skiprows=1)
    assert data.shape == (1000, 16)
    e = np.abs(data[:, 6:11])
    assert np.all(np.diff(e, axis=0) <= 1e-15)
    assert e[-1, 0] < 2e-3
    assert (tmp_path / "pf.dat").exists()


def test_simulate_to_stdout():
    code, text = run("simulate", "tpf_s3", "--samples", "3", "--out", "-")
    rows = text.splitlines()
    assert code == 0 and rows[0] == "t,y1,y2,y3,y4,y5,e1,e2,e3,e4,e5,u1,u2,u3,u4,u5"
    assert len(rows) == 4


def test_simulate_default_name(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run("simulate", "lf", "--samples", "5")[0] == 0
    assert (tmp_path / "lf.csv").exists() and (tmp_path / "lf.dat").exists()


def test_simulate_mpc(tmp_path):
    code, text = run("simulate", "cmp_pf", "--solver", "mpc", "--out", str(tmp_path / "m.csv"))
    assert code == 0 and "solver: mpc" in text and "151 rows" in text


def test_simulate_fallback_label(tmp_path):
    code, text = run("simulate", "cmp_tpf", "--out", str(tmp_path / "c.csv"))
    assert code == 0 and "solver: tpf->oracle" in text


def test_validate_passes():
    code, text = run("validate", "tpf_s4")
    assert code == 0
    assert "all checks passed" in text and "FAIL" not in text
    assert "corrupted lambda0 x1.1 rejected" in text


def test_validate_fails_on_bad_solution(monkeypatch):
    def bad(scenario, method="auto"):
        return corrupted(solve_general(scenario)), "general"

    monkeypatch.setattr(cli, "solve", bad)
    code, text = run("validate", "tpf_s3", "--bumps", "4")
    assert code == 2
    assert "validation FAILED" in text


def test_stability_lf():
    code, text = run("stability", "lf")
    assert code == 0
    assert "Fiedler value (with virtual leader): 0.0520" in text
    assert "not converged at t_f = 10" in text
    assert "re-solved with t_f = 60" in text
    assert "mean convergence time (extended horizon): 21.4" in text


def test_stability_pf_string_ratios():
    code, text = run("stability", "pf_s1")
    assert code == 0
    assert "|e_2(0)|/|e_1(0)| = 1.7708  amplifies (weights differ)" in text
    assert "PF string-stability condition: violated" in text


def test_compare():
    code, text = run("compare", "cmp_pf")
    assert code == 0
    assert "game solver: pf" in text and "lower effort: mpc" in text


def test_compare_overrides():
    code, text = run("compare", "cmp_pf", "--N", "10", "--Ts", "0.05")
    assert code == 0 and "MPC N = 10  T_s = 0.05" in text


@pytest.mark.parametrize(
    "argv, code",
    [
        (["simulate", "pf_s1", "--bogus"], 64),
        (["frobnicate"], 64),
        ([], 64),
        (["simulate", "pf_s1", "--samples", "1", "--out", "-"], 64),
        (["simulate", "tpf_s3", "--solver", "pf", "--out", "-"], 64),
        (["simulate", "/nonexistent/dir/x.cfg"], 66),
        (["simulate", "no_such_scenario"], 66),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert run(*argv)[0] == code
    assert capsys.readouterr().err


def test_invalid_scenario_file(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[platoon]\nn = 1\nt_f = 1\n[vehicles]\n0 1\n1 0.5 0.2\n[topology]\nkind = pf\n1 1\n")
    assert run("simulate", str(p))[0] == 66
    assert "distancing policy must be negative" in capsys.readouterr().err


def test_version(capsys):
    assert run("--version")[0] == 0
    assert __version__ in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "platoon_nash", "stability", "tpf_s3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "mean convergence time: 3.84 s" in proc.stdout
