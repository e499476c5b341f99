import json
import math
import subprocess
import sys

import numpy as np
import pytest

from etcdelay import io
from etcdelay.cli import main


def _cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_simulate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--out", str(out), "--t-end", "10"]) == 0
    text = capsys.readouterr().out
    assert "events:" in text and "min gap:" in text and "final |x|:" in text
    header, rows = io.read_csv(out / "trajectory.csv")
    _, ev = io.read_csv(out / "events.csv")
    n_events = len(ev) - 1
    assert len(rows) == math.ceil(10 / 0.005) + n_events + 1
    for name in ("state.svg", "control.svg", "residual.svg"):
        assert (out / "plots" / name).exists()


def test_simulate_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--out", str(tmp_path / d), "--t-end", "8", "--seed", "3"]) == 0
    for f in ("trajectory.csv", "events.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_flags_override_config(tmp_path):
    cfg = _cfg(tmp_path, {"trigger": {"sigma": 0.05}, "integrator": {"t_end": 50}})
    out = tmp_path / "o"
    assert main(["simulate", "--config", cfg, "--sigma", "0.16", "--t-end", "2",
                 "--h", "0.01", "--out", str(out)]) == 0
    _, rows = io.read_csv(out / "trajectory.csv")
    assert float(rows[-1][0]) == pytest.approx(2.0)
    assert float(rows[1][0]) == pytest.approx(0.01)


def test_rejected_trigger_exits_2(tmp_path, capsys):
    assert main(["simulate", "--sigma", "0", "--a", "0", "--out", str(tmp_path)]) == 2
    assert "trigger" in capsys.readouterr().err


def test_corrupt_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"integrator": {"h": }')
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "bad.json:1:" in capsys.readouterr().err
    cfg = _cfg(tmp_path, {"integrator": {"h": "fast"}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "integrator.h" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


def test_blowup_exits_3(tmp_path):
    cfg = _cfg(tmp_path, {
        "scenario": "linear", "model": {"A": [[50.0]], "B": [[1.0]], "K": [[0.0]]},
        "phi": [1.0], "trigger": {"sigma": 0.1, "a": 0.0, "b": 1.0},
        "integrator": {"t_end": 30},
    })
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_zeno_guard_exits_4(tmp_path):
    cfg = _cfg(tmp_path, {"integrator": {"zeno_floor": 1.0, "t_end": 10}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 4


def test_feedback_zero_dynamics(tmp_path):
    cfg = _cfg(tmp_path, {
        "scenario": "linear", "model": {"A": [[0.0, 0.0], [0.0, 0.0]], "B": [[0.0], [0.0]]},
        "phi": [1.0, 2.0], "integrator": {"t_end": 1.0, "h": 0.1},
    })
    out = tmp_path / "o"
    assert main(["feedback", "--config", cfg, "--out", str(out)]) == 0
    _, rows = io.read_csv(out / "trajectory.csv")
    x = np.array([[float(r[1]), float(r[2])] for r in rows])
    assert np.all(x == [1.0, 2.0])


def test_certify_passes_and_writes_bounds(tmp_path, capsys):
    out = tmp_path / "c"
    cfg = _cfg(tmp_path, {"constants": {"samples": 2000}})
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads((out / "bounds.json").read_text())
    assert data["ok"] is True
    assert set(data["checks"]) == {"enforcement", "decrease", "envelope", "zeno"}
    assert data["constants"]["Mbar"] == pytest.approx(50.0)
    assert "PASS" in capsys.readouterr().out


def test_certify_overstated_mu_exits_5(tmp_path):
    cfg = _cfg(tmp_path, {"certificate": {"mu": 0.9}, "constants": {"samples": 500}})
    assert main(["certify", "--config", cfg, "--out", str(tmp_path / "c")]) == 5
    data = json.loads((tmp_path / "c" / "bounds.json").read_text())
    assert "decrease" in data["failed"]


def test_halanay_selftest(capsys):
    assert main(["halanay-selftest", "--seed", "1", "--count", "50"]) == 0
    assert "failures: 0" in capsys.readouterr().out
    assert main(["halanay-selftest", "--count", "0"]) == 2


def test_single_cell_sweep_matches_simulate(tmp_path):
    assert main(["sweep", "--sigma", "0.16", "--a", "1", "--b", "0.14", "--t-end", "10",
                 "--out", str(tmp_path / "s")]) == 0
    header, rows = io.read_csv(tmp_path / "s" / "sweep.csv")
    assert len(rows) == 1
    assert main(["simulate", "--t-end", "10", "--out", str(tmp_path / "r")]) == 0
    _, ev = io.read_csv(tmp_path / "r" / "events.csv")
    assert int(rows[0][header.index("events")]) == len(ev) - 1


def test_parallel_sweep_matches_serial(tmp_path):
    args = ["sweep", "--a", "0.5,1", "--b", "0.14,0.5", "--t-end", "5"]
    assert main(args + ["--out", str(tmp_path / "p"), "--jobs", "2"]) == 0
    assert main(args + ["--out", str(tmp_path / "q")]) == 0
    assert (tmp_path / "p" / "sweep.csv").read_bytes() == (tmp_path / "q" / "sweep.csv").read_bytes()
    _, rows = io.read_csv(tmp_path / "p" / "sweep.csv")
    assert len(rows) == 4


def test_empty_sweep_exits_2(tmp_path):
    cfg = _cfg(tmp_path, {"sweep": {"b": []}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_bad_sweep_cell_exits_2(tmp_path):
    assert main(["sweep", "--b", "0.1,-1", "--out", str(tmp_path)]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "etcdelay.cli", "simulate", "--sigma", "0", "--a", "0",
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "etcdelay.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("simulate", "feedback", "certify", "halanay-selftest", "sweep"):
        assert sub in proc.stdout
