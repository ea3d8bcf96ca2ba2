import json
import subprocess
import sys
from pathlib import Path

import pytest

from lifespan_lab.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

FAST = """
[system]
p = 2
n = 1
[data]
amplitude = 1
width = 0.5
[run]
horizon = 100
[campaign]
eps_min = 1
eps_max = 100
points = 6
"""


def test_exponents(tmp_path, capsys):
    assert main(["exponents", "--p", "2, 3", "--n", "1", "--out", str(tmp_path)]) == 0
    info = json.loads((tmp_path / "exponents.json").read_text())
    assert info["alpha"] == ["3/5", "4/5"] and info["argmax"] == 2
    assert info["lifespan_exponent"] == "-10/3"
    assert info["P"] == ["9", "4"] and info["Q"] == ["3", "1"]
    assert json.loads(capsys.readouterr().out) == info
    rows = (tmp_path / "exponents.csv").read_text().splitlines()
    assert rows == ["j,p,alpha,l,P,Q", "1,2,3/5,3/10,9,3", "2,3,4/5,1/2,4,1"]


def test_bad_input_exits_2(capsys):
    assert main(["exponents", "--p", "1, 1"]) == 2
    assert main(["exponents", "--p", "0.5"]) == 2
    assert main(["bound"]) == 2
    assert main(["simulate", "--config", "/nonexistent.ini"]) == 2
    assert main(["testfn", "--n", "5"]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_testfn_writes_profile(tmp_path, capsys):
    assert main(["testfn", "--n", "2", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "psi_n2.csv").read_text().splitlines()
    assert rows[0] == "r,psi,dpsi,residual" and len(rows) == 102
    assert "lambda=" in capsys.readouterr().out


def test_ode(tmp_path, capsys):
    assert main(["ode", "--config", str(CONFIGS / "ode_minorant.ini"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    T = float(out.split("T_num=")[1].split()[0])
    T0 = float(out.split("T0_tilde=")[1].split()[0])
    assert T <= T0
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,f_1,f_2\n")


def test_bound_and_simulate(tmp_path, capsys):
    cfg = tmp_path / "fast.ini"
    cfg.write_text(FAST)
    assert main(["bound", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    head, vals = (tmp_path / "bound.csv").read_text().splitlines()
    b = dict(zip(head.split(","), vals.split(",")))
    assert head.startswith("R0,T0,threshold,T0_tilde")
    assert float(b["T0"]) > 0 and float(b["R0"]) > 0 and b["j0"] == "1"
    assert main(["simulate", "--config", str(cfg), "--eps", "2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "inequality=holds" in out
    head = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert head == "t,M,sup_1,l1_1,U_1"


def test_bound_not_available_for_subcritical(capsys):
    assert main(["bound", "--config", str(CONFIGS / "global_n3.ini")]) == 1


def test_campaign_and_reconcile(tmp_path):
    cfg = tmp_path / "scalar.ini"
    cfg.write_text((CONFIGS / "scalar_fujita.ini").read_text())
    out = tmp_path / "out"
    assert main(["campaign", "--config", str(cfg), "--out", str(out), "--seed", "1"]) == 0
    assert main(["reconcile", "--report", str(out / "report.json"), "--out", str(out)]) == 0
    assert (out / "verdict.txt").read_text().startswith("verdict: PASS")


def test_negative_control_exits_1(tmp_path):
    cfg = tmp_path / "wrong.ini"
    cfg.write_text((CONFIGS / "scalar_fujita.ini").read_text() + "alpha_override = 2\n")
    assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert main(["reconcile", "--report", str(tmp_path / "o" / "report.json")]) == 1


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "lifespan_lab.cli", "exponents", "--p", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and '"criticality": "supercritical"' in res.stdout
