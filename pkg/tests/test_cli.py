import json
import subprocess
import sys

import pytest

from ftnkit import cli
from ftnkit.cli import main, parse_grid

COMMANDS = [[], ["pulse"], ["pulse", "dump"], ["channel"], ["capacity"], ["baseline"],
            ["thresholds"], ["alloc"], ["sim"]]


@pytest.mark.parametrize("cmd", COMMANDS, ids=lambda c: " ".join(c) or "root")
def test_help_everywhere(cmd, capsys):
    assert main(cmd + ["--help"]) == 0
    assert "Usage:" in capsys.readouterr().out


def test_grid_parsing():
    assert parse_grid("0:2:0.5") == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert parse_grid("1, 0.8") == [1.0, 0.8]
    for bad in ("0:1:0", "a,b", "", "3:1:1"):
        with pytest.raises(Exception):
            parse_grid(bad)


def test_usage_errors_exit_2(tmp_path):
    assert main(["channel", "--tau", "1.5", "--out", str(tmp_path)]) == 2
    assert main(["capacity", "--snr-db", "x", "--out", str(tmp_path)]) == 2
    assert main(["bogus"]) == 2
    assert main(["sim", "--scheme", "128QAM", "--out", str(tmp_path)]) == 2
    assert main(["sim", "--tau", "0.8", "--cp-length", "3", "--out", str(tmp_path)]) == 2


def test_runtime_error_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["channel", "--out", str(blocker / "sub")]) == 3


@pytest.mark.parametrize("body, msg", [
    ('{\n  "trials": 2,\n  "speed": 1\n}', "cfg.json:3: unknown key 'speed'"),
    ('{\n  "trials": "many"\n}', "cfg.json:2: 'trials' has the wrong type"),
    ('{"sim": {\n "N": 64,\n "wf": true}}', "cfg.json:3: unknown key 'sim.wf'"),
    ('{\n  "trials": 2,\n}', "cfg.json:3: invalid JSON"),
])
def test_config_errors_point_at_line(tmp_path, capsys, body, msg):
    p = tmp_path / "cfg.json"
    p.write_text(body)
    assert main(["sim", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert msg in capsys.readouterr().err


def _run_twice(tmp_path, args):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert main(args + ["--out", str(d), "--timestamp", "2000-01-01T00:00:00Z"]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]
    return outs[0]


def test_channel_outputs(tmp_path):
    files = _run_twice(tmp_path, ["channel", "--tau", "0.8", "--N", "64"])
    assert set(files) == {"taps.csv", "gains.csv", "manifest.json"}
    assert files["gains.csv"].startswith(b"i,omega,H,abs_H\n")
    assert b"\r" not in files["gains.csv"]
    assert files["gains.csv"].count(b"\n") == 65
    m = json.loads(files["manifest.json"])
    assert m["command"] == "channel"
    assert sorted(m["outputs"]) == ["gains.csv", "taps.csv"]
    assert len(m["config_hash"]) == 16


def test_pulse_dump(tmp_path):
    files = _run_twice(tmp_path, ["pulse", "dump", "--family", "rect", "--points", "11"])
    assert files["pulse_spectrum.csv"].count(b"\n") == 12


def test_capacity_outputs(tmp_path):
    files = _run_twice(tmp_path, ["capacity", "--expr", "ftn-srrc", "--snr-db", "0:10:5",
                                  "--tau", "1,0.8", "--threads", "2"])
    lines = files["capacity_ftn-srrc.csv"].decode().splitlines()
    assert lines[0] == "tau,snr_dB,capacity,err_est"
    assert len(lines) == 7


def test_alloc_from_channel(tmp_path):
    assert main(["channel", "--tau", "0.7", "--N", "64", "--out", str(tmp_path / "c")]) == 0
    assert main(["alloc", "--gains", str(tmp_path / "c" / "gains.csv"), "--snr-db", "10",
                 "--out", str(tmp_path / "a")]) == 0
    text = (tmp_path / "a" / "powers.csv").read_text()
    powers = [float(r.split(",")[2]) for r in text.splitlines()[1:]]
    assert sum(powers) == pytest.approx(64)


def test_baseline_and_thresholds(tmp_path, capsys):
    args = ["--snr-db", "0:30:3", "--trials", "200", "--packet-bits", "120"]
    assert main(["baseline", *args, "--out", str(tmp_path / "b")]) == 0
    base = tmp_path / "b" / "baseline.csv"
    assert base.read_text().startswith("scheme,snr_dB,throughput,correct_bits,trials,seed\n")
    rc = main(["thresholds", "--baseline", str(base), "--packet-bits", "120",
               "--out", str(tmp_path / "t")])
    assert rc == 0
    assert "reference" in capsys.readouterr().out
    comp = (tmp_path / "t" / "comparison.csv").read_text().splitlines()
    assert comp[0] == "scheme,reference_dB,derived_dB,delta_dB" and len(comp) == 6


def test_sim_small(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sim": {"N": 64, "trials": 3, "snr_db": "10,20"}}))
    files = _run_twice(tmp_path, ["sim", "--config", str(cfg), "--tau", "1,0.8",
                                  "--seed", "5"])
    assert "throughput_tau0.8_wf_loading.csv" in files
    assert "throughput_tau1_wf_loading.csv" in files
    m = json.loads(files["manifest.json"])
    assert [r["tau"] for r in m["config"]["runs"]] == [1.0, 0.8]
    assert m["config"]["runs"][0]["seed"] == 5


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ftnkit", "channel", "--tau", "2",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 2
    r = subprocess.run([sys.executable, "-m", "ftnkit", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and cli.__version__ in r.stdout
