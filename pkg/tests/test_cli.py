import subprocess
import sys

import numpy as np
import pytest

from roughstab import csvio
from roughstab.cli import main


def write(path, text):
    path.write_text(text)
    return path


def test_simulate_and_exit_codes(tmp_path, capsys):
    scen = write(tmp_path / "s.txt", "system = motivational-2d\ndriver = oscillatory-limit(3, 4)\nlyapunov = quadratic\n")
    assert main(["simulate", "--scenario", str(scen), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("verdict=globally-ASiR")
    assert (tmp_path / "o" / "manifest.json").exists()
    bad = write(tmp_path / "bad.txt", "system = nowhere\ndriver = none\n")
    assert main(["simulate", "--scenario", str(bad)]) == 3
    assert main(["simulate", "--scenario", str(tmp_path / "missing.txt")]) == 3
    assert main(["simulate", "--scenario", str(scen), "--eta", "10"]) == 3


def test_simulate_overrides(tmp_path):
    scen = write(tmp_path / "s.txt", "system = example-1d\ndriver = oscillatory(1, 1, 2)\nhorizon = 0.2\n")
    assert main(["simulate", "--scenario", str(scen), "--eta", "5", "--out", str(tmp_path / "o")]) == 0
    _, _, comments = csvio.read_table(tmp_path / "o" / "trajectory.csv")
    assert comments["eta"] == "5"
    w = write(tmp_path / "w.txt", "system = example-1d\ndriver = wiener(1, 100)\n")
    assert main(["simulate", "--scenario", str(w), "--seed", "9", "--out", str(tmp_path / "w")]) == 0
    _, _, comments = csvio.read_table(tmp_path / "w" / "trajectory.csv")
    assert comments["seed"] == "9"


def test_blowup_exit_code(tmp_path):
    # with a tiny Wiener grid the scalar example x' = ... - x^2 dw escapes quickly for large x0
    scen = write(tmp_path / "s.txt", "system = example-1d\ndriver = wiener(3, 10)\nx0 = 2000\nhorizon = 1\n")
    assert main(["simulate", "--scenario", str(scen), "--out", str(tmp_path / "o")]) == 2


def test_lift_and_limit(tmp_path, capsys):
    assert main(["lift", "--eta", "100", "--cells", "100", "--out", str(tmp_path / "l")]) == 0
    out = capsys.readouterr().out
    area = float(next(l for l in out.splitlines() if l.startswith("levy_area[1,2]")).split("=")[1])
    assert area == pytest.approx(6.0, abs=0.01)
    assert (tmp_path / "l" / "rough_path.csv").exists()
    assert main(["lift", "--seed", "4", "--cells", "50", "--out", str(tmp_path / "w")]) == 0
    assert main(["lift", "--input", str(tmp_path / "w" / "signal.csv"), "--out", str(tmp_path / "again")]) == 0
    assert main(["limit", "--out", str(tmp_path / "lim")]) == 0
    _, limit, _ = csvio.read_table(tmp_path / "lim" / "limit_drift.csv")
    np.testing.assert_allclose(limit, np.diag([-1.0, -5.0]), atol=1e-8)
    _, ito, _ = csvio.read_table(tmp_path / "lim" / "ito_drift.csv")
    np.testing.assert_allclose(ito, np.diag([-9.0, -1.0]), atol=1e-8)
    assert main(["limit", "--system", "unknown"]) == 3


def test_lyapunov_require(tmp_path, capsys):
    assert main(["lyapunov", "--out", str(tmp_path), "--require", "global", "--grid", "radius=5,shells=10"]) == 0
    out = capsys.readouterr().out
    assert "verdict=globally-ASiR (up to tested radius 5)" in out and "uasas_condition=fails channel=1" in out
    assert main(["lyapunov", "--b1", "2", "--b2", "1", "--out", str(tmp_path), "--require", "global"]) == 5
    assert main(["lyapunov", "--b1", "2", "--b2", "1", "--out", str(tmp_path), "--require", "stable"]) == 0
    assert main(["lyapunov", "--grid", "colour=3", "--out", str(tmp_path)]) == 3


def test_converge_exit_codes(tmp_path, capsys):
    args = ["converge", "--system", "example-1d", "--x0", "1", "--b1", "1", "--b2", "1", "--horizon", "2"]
    assert main(args + ["--etas", "10", "100", "--out", str(tmp_path / "a")]) == 0
    assert main(["converge", "--etas", "1", "10", "--out", str(tmp_path / "b")]) == 4
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert (tmp_path / "b" / "convergence.csv").exists()


def test_precision_of_output(tmp_path):
    scen = write(tmp_path / "s.txt", "system = example-1d\ndriver = oscillatory-limit(1, 1)\nhorizon = 0.01\n")
    main(["simulate", "--scenario", str(scen), "--out", str(tmp_path / "o")])
    header, data, _ = csvio.read_table(tmp_path / "o" / "trajectory.csv")
    last = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()[-1]
    assert float(last.split(",")[1]) == data[-1, 1]
    assert len(last.split(",")[1]) >= 17


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "roughstab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
    res = subprocess.run([sys.executable, "-m", "roughstab", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 3 and "invalid choice" in res.stderr
