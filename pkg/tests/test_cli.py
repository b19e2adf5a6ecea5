import json
import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

from proxileak.cli import EXIT_CONFIG, EXIT_OK, main

ROOT = Path(__file__).resolve().parent.parent

FAST_LOCALIZE = """\
seed = 5
attack = localize
n_users = 3
catalog_size = 50
trials = 3
probe_count = 8
solver_max_iterations = 150
"""


def write_cfg(tmp_path, text, name="scenario.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_run_and_reproducibility(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", str(cfg), "--out", str(out1)]) == EXIT_OK
    assert main(["run", str(cfg), "--out", str(out2)]) == EXIT_OK
    for name in ("manifest.cfg", "localize_trials.csv", "summary.csv",
                 "samples.csv", "violations.csv", "probe_map.svg"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_seed_override_changes_results(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(out1)]) == EXIT_OK
    assert main(["run", str(cfg), "--seed", "99", "--out", str(out2)]) == EXIT_OK
    a = (out1 / "localize_trials.csv").read_text()
    b = (out2 / "localize_trials.csv").read_text()
    assert a != b


def test_missing_seed_is_config_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "attack = localize\n")
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_bad_key_is_config_error(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE + "bogus = 1\n")
    assert main(["run", str(cfg)]) == EXIT_CONFIG


def test_set_overrides(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    out = tmp_path / "o"
    assert main(["run", str(cfg), "--out", str(out),
                 "--set", "trials=2", "--set", "probe_count=6"]) == EXIT_OK
    manifest = (out / "manifest.cfg").read_text()
    assert "trials = 2" in manifest
    assert "probe_count = 6" in manifest


def test_out_env_var(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    target = tmp_path / "from-env"
    monkeypatch.setenv("PROXILEAK_OUT", str(target))
    assert main(["run", str(cfg)]) == EXIT_OK
    assert (target / "manifest.cfg").exists()


def test_sweep_quantum(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE + "trials = 10\n")
    out = tmp_path / "sweep"
    assert main(["sweep", str(cfg), "--param", "distance_quantum_m",
                 "--values", "50,500", "--out", str(out)]) == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("param,value,")
    assert len(lines) == 3
    assert (out / "distance_quantum_m=50" / "manifest.cfg").exists()
    # error-vs-quantum artifact, sorted ascending, median non-decreasing
    rows = (out / "error_vs_quantum.csv").read_text().splitlines()[1:]
    quanta = [float(r.split(",")[0]) for r in rows]
    medians = [float(r.split(",")[1]) for r in rows]
    assert quanta == sorted(quanta)
    assert medians == sorted(medians)


FAST_IDENTIFY = """\
seed = 9
attack = identify
n_users = 300
catalog_size = 300
mean_likes = 5
identify_victims = 8
"""


def test_identify_run_reproducible_and_mode_sweep(tmp_path):
    cfg = write_cfg(tmp_path, FAST_IDENTIFY, name="ident.cfg")
    out1, out2 = tmp_path / "i1", tmp_path / "i2"
    assert main(["run", str(cfg), "--out", str(out1)]) == EXIT_OK
    assert main(["run", str(cfg), "--out", str(out2)]) == EXIT_OK
    for name in ("identification.csv", "pool_sizes.csv", "summary.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    sweep_out = tmp_path / "modes"
    assert main(["sweep", str(cfg), "--param", "interests_mode",
                 "--values", "pages,categories", "--out", str(sweep_out)]) == EXIT_OK
    lines = (sweep_out / "sweep.csv").read_text().splitlines()
    header = lines[0].split(",")
    rate_col = header.index("identification_rate")
    rates = {line.split(",")[1]: float(line.split(",")[rate_col])
             for line in lines[1:]}
    assert rates["categories"] <= rates["pages"]


def test_bundled_localize_scenario_golden(tmp_path):
    out = tmp_path / "bcn"
    assert main(["run", str(ROOT / "scenarios" / "localize_bcn.cfg"),
                 "--out", str(out), "--set", "trials=5"]) == EXIT_OK
    # probe-circle map artifacts, one circle per sample
    svg = (out / "probe_map.svg").read_text()
    assert svg.count("sample-circle-") == 16
    assert 'id="estimate-marker"' in svg and 'id="truth-marker"' in svg
    samples = (out / "samples.csv").read_text().splitlines()
    assert len(samples) == 17  # header + 16 probes
    summary = dict(line.split(",") for line in
                   (out / "summary.csv").read_text().splitlines()[1:])
    assert float(summary["median_error_m"]) < 100.0


def test_sweep_single_value_matches_plain_run(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    out_run, out_sweep = tmp_path / "plain", tmp_path / "sw"
    assert main(["run", str(cfg), "--out", str(out_run),
                 "--set", "distance_quantum_m=100"]) == EXIT_OK
    assert main(["sweep", str(cfg), "--param", "distance_quantum_m",
                 "--values", "100", "--out", str(out_sweep)]) == EXIT_OK
    sub = out_sweep / "distance_quantum_m=100"
    assert ((sub / "localize_trials.csv").read_bytes()
            == (out_run / "localize_trials.csv").read_bytes())


def test_sweep_unknown_param(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    assert main(["sweep", str(cfg), "--param", "n_users",
                 "--values", "1,2"]) == EXIT_CONFIG


def test_sweep_parallel_matches_sequential(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    seq, par = tmp_path / "seq", tmp_path / "par"
    assert main(["sweep", str(cfg), "--param", "probe_count",
                 "--values", "6,10", "--out", str(seq)]) == EXIT_OK
    assert main(["sweep", str(cfg), "--param", "probe_count",
                 "--values", "6,10", "--out", str(par),
                 "--parallel", "2"]) == EXIT_OK
    assert (seq / "sweep.csv").read_bytes() == (par / "sweep.csv").read_bytes()


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_round_trip_and_signal_shutdown(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    port = free_port()
    env = dict(os.environ, PYTHONPATH=str(ROOT / "src"))
    proc = subprocess.Popen(
        [sys.executable, "-m", "proxileak", "serve", str(cfg),
         "--port", str(port)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env, cwd=ROOT,
        text=True)
    try:
        assert "listening" in proc.stdout.readline()
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            f = sock.makefile("rw", encoding="utf-8", newline="\n")
            f.write(json.dumps({"op": "login", "token": "u00000"}) + "\n")
            f.flush()
            assert json.loads(f.readline()) == {"ok": True, "user_id": "u00000"}
            f.write("garbage\n")
            f.flush()
            assert json.loads(f.readline())["error"] == "bad_request"
            f.write(json.dumps({"op": "nearby", "radius_m": 1e6}) + "\n")
            f.flush()
            assert json.loads(f.readline())["ok"] is True
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=10) == 0
    finally:
        if proc.poll() is None:
            proc.kill()


def test_serve_bind_failure_is_runtime_error(tmp_path):
    cfg = write_cfg(tmp_path, FAST_LOCALIZE)
    with socket.socket() as blocker:
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        env = dict(os.environ, PYTHONPATH=str(ROOT / "src"))
        proc = subprocess.run(
            [sys.executable, "-m", "proxileak", "serve", str(cfg),
             "--port", str(port)],
            capture_output=True, env=env, cwd=ROOT, timeout=30)
        assert proc.returncode == 3
