import json
import subprocess
import sys

import numpy as np
import pytest

from qbc import __version__, jsonio
from qbc.channels import BroadcastChannel, bundled
from qbc.cli import main
from qbc.regions import RateRegion

SMALL = ["--weights", "5", "--restarts", "2", "--maxiter", "60"]


def test_convert(capsys):
    assert main(["convert", "--c12", "1.0"]) == 0
    assert capsys.readouterr().out.strip() == "CQ12 = 0.5"
    assert main(["convert", "--cq12", "0.35"]) == 0
    assert capsys.readouterr().out.strip() == "C12 = 0.7"
    assert main(["convert", "--c12", "-1"]) == 2


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err
    assert main([]) == 2
    assert main(["region", "classical", "--bundled", "bsc_cascade"]) == 2  # missing --c12


def test_missing_channel_file(tmp_path):
    assert main(["channel", "info", "--channel", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"type": "something_else"}))
    assert main(["channel", "info", "--channel", str(bad)]) == 2


def test_guard_exit_code(capsys):
    code = main(["simulate", "--bundled", "bsc_cascade", "--n", "30", "--r0", "0.5", "--r1", "0.5",
                 "--c12", "0"])
    assert code == 1
    assert "guard" in capsys.readouterr().err


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("QBC_WORKERS", "zero")
    assert main(["convert", "--c12", "1"]) == 2
    monkeypatch.setenv("QBC_WORKERS", "1")
    assert main(["convert", "--c12", "1"]) == 0


def test_channel_info_and_export(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["channel", "export", "--bundled", "qubit_hadamard", "--out", str(out)]) == 0
    bc = BroadcastChannel.load(out)
    assert np.array_equal(bc.channel.kraus, bundled("qubit_hadamard").channel.kraus)
    info = tmp_path / "info.json"
    assert main(["channel", "info", "--channel", str(out), "--out", str(info)]) == 0
    text = capsys.readouterr().out
    assert "is_hadamard: True" in text and "degraded: True" in text
    doc = jsonio.load(info)
    assert doc["schema"] == "qbc/1" and doc["version"] == __version__
    assert doc["info"]["degraded"]["residual"] <= 1e-6


def test_region_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["region", "classical", "--bundled", "bsc_cascade", "--c12", "0", "--seed", "4"] + SMALL
    assert main(base + ["--csv", str(a)]) == 0
    assert main(base + ["--csv", str(b)]) == 0
    la, lb = a.read_text().splitlines(), b.read_text().splitlines()
    assert la[1:] == lb[1:]
    header = json.loads(la[0][2:])
    assert header["seed"] == 4 and header["config"]["c12"] == 0.0
    assert la[1] == "R0,R1" and len(la) >= 4


def test_region_artifact_reproduces_from_its_config(tmp_path):
    out = tmp_path / "r.json"
    argv = ["region", "quantum-inner", "--bundled", "erasure_broadcast", "--cq12", "0.1", "--out", str(out)] + SMALL
    assert main(argv) == 0
    first = out.read_text()
    reg = RateRegion.load(out)
    assert reg.kind == "inner" and reg.metadata["run"]["version"] == __version__
    assert main(reg.metadata["run"]["argv"]) == 0
    assert out.read_text() == first


def test_outer_region_and_relay_outputs(tmp_path):
    out = tmp_path / "o.json"
    assert main(["region", "quantum-outer", "--bundled", "amplitude_split", "--cq12", "0.2", "--t-dim", "2",
                 "--out", str(out)] + SMALL) == 0
    reg = RateRegion.load(out)
    assert reg.kind == "outer" and reg.metadata["t_dim"] == 2
    rel, csv = tmp_path / "rel.json", tmp_path / "rel.csv"
    assert main(["relay", "bounds", "--bundled", "dephasing_broadcast", "--grid", "0:0.5:2", "--no-eof",
                 "--restarts", "4", "--out", str(rel), "--csv", str(csv)]) == 0
    doc = jsonio.load(rel)
    assert doc["type"] == "relay_bounds_grid" and [p["cq12"] for p in doc["points"]] == [0.0, 0.5]
    assert doc["config"]["no_eof"] is True
    assert csv.read_text().splitlines()[1] == "cq12,cutset,decode_forward,eof_lower"
    assert main(["relay", "bounds", "--bundled", "dephasing_broadcast", "--grid", "nonsense"]) == 2


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "s.json"
    argv = ["simulate", "--bundled", "bsc_cascade", "--n", "6", "--r0", "0.34", "--r1", "0.17", "--c12", "0.17",
            "--trials", "200", "--pmf", "[[0.25, 0.25], [0.25, 0.25]]", "--out", str(out)]
    assert main(argv) == 0
    doc = jsonio.load(out)
    assert doc["type"] == "sim_report" and doc["trials"] == 200 and doc["config"]["n"] == 6
    assert main(argv) == 0
    assert jsonio.load(out) == doc
    assert main(["simulate", "--bundled", "qubit_hadamard", "--n", "4", "--r0", "0.25", "--r1", "0",
                 "--c12", "0", "--trials", "20"]) == 2
    assert main(["simulate", "--bundled", "dephasing_broadcast", "--n", "4", "--r0", "0.25", "--r1", "0",
                 "--c12", "0", "--trials", "50", "--quantum"]) == 0
    assert main(["simulate", "--bundled", "bsc_cascade", "--n", "4", "--r0", "-0.25", "--r1", "0",
                 "--c12", "0"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qbc", "convert", "--c12", "1.0"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "CQ12 = 0.5"
    res = subprocess.run([sys.executable, "-m", "qbc", "--version"], capture_output=True, text=True)
    assert __version__ in res.stdout
