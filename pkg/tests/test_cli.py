import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from bosonic_qpe import cli

SMALL_CONFIG = {
    "version": 1,
    "experiment": "detect-rotation",
    "code": {"family": "cat", "order": 3, "mu": 0, "alpha": 2.0, "dim": 40,
             "loss": {"chi": 0.15}},
    "schedule": {"order": 3, "m": 3},
    "noise": {"kind": "off"},
    "sampling": {"samples": 60, "seed": 9},
}


def _run(*args, env=None):
    import os

    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "bosonic_qpe.cli", *args],
        capture_output=True, text=True, env=full_env,
    )


def _write_config(tmp_path, payload, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_list_experiments_json():
    proc = _run("list-experiments", "--json")
    assert proc.returncode == 0
    listing = json.loads(proc.stdout)["experiments"]
    assert {e["name"] for e in listing} == {
        "detect-rotation", "detect-gkp", "prepare-code",
        "fock-generate", "infidelity-scan", "heisenberg-scan",
    }
    assert all(e["description"] for e in listing)


def test_bundled_configs_all_validate():
    base = resources.files("bosonic_qpe") / "configs"
    names = [p.name for p in base.iterdir() if p.name.endswith(".json")]
    assert len(names) >= 8
    for name in names:
        cfg = json.loads((base / name).read_text())
        jsonschema.validate(cfg, cli.CONFIG_SCHEMA)


def test_dry_run_prints_schedule(tmp_path):
    path = _write_config(tmp_path, SMALL_CONFIG)
    proc = _run("run", str(path), "--dry-run")
    assert proc.returncode == 0
    derived = json.loads(proc.stdout)
    sched = derived["run"]
    assert len(sched["times_us"]) == 3
    assert sched["t_total_us"] == pytest.approx(sum(sched["times_us"]))
    # halving pattern: each round half the previous interrogation time
    times = sched["times_us"]
    assert times[0] == pytest.approx(2 * times[1])
    assert times[1] == pytest.approx(2 * times[2])


def test_rejected_config_exits_2(tmp_path):
    path = _write_config(tmp_path, {"version": 1, "experiment": "no-such-kind"})
    proc = _run("run", str(path))
    assert proc.returncode == 2
    err = json.loads(proc.stderr)
    assert err["exit_code"] == 2
    assert err["error"] == "ConfigError"


def test_missing_config_exits_2(tmp_path):
    proc = _run("run", str(tmp_path / "absent.json"))
    assert proc.returncode == 2


def test_insufficient_dimension_exits_3(tmp_path):
    bad = json.loads(json.dumps(SMALL_CONFIG))
    bad["code"].update({"order": 5, "alpha": 5.0, "dim": 20})
    bad["schedule"]["order"] = 5
    path = _write_config(tmp_path, bad)
    proc = _run("run", str(path), "--output-dir", str(tmp_path / "out"))
    assert proc.returncode == 3
    assert json.loads(proc.stderr)["exit_code"] == 3


def test_selection_failure_exits_5(tmp_path):
    cfg = {
        "version": 1,
        "experiment": "fock-generate",
        "code": {"family": "coherent", "alpha": 9.0, "dim": 160, "target": 87},
        "schedule": {"moduli": [7, 15], "m": 8},
        "sampling": {"attempts": 1, "seed": 123},
    }
    path = _write_config(tmp_path, cfg)
    proc = _run("run", str(path), "--output-dir", str(tmp_path / "out"))
    assert proc.returncode == 5
    assert json.loads(proc.stderr)["error"] == "SelectionFailureError"


def test_extended_config_is_gated(tmp_path):
    base = resources.files("bosonic_qpe") / "configs" / "gkp-full.json"
    proc = _run("run", str(base))
    assert proc.returncode == 2
    assert "--extended" in json.loads(proc.stderr)["message"]


def test_run_writes_bundle(tmp_path):
    path = _write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / "bundle"
    proc = _run("run", str(path), "--output-dir", str(out), "--workers", "1")
    assert proc.returncode == 0, proc.stderr
    hist = (out / "histogram.csv").read_text().splitlines()
    assert hist[0] == "series,theta,weight,label"
    assert len(hist) > 1
    weights = [float(line.split(",")[2]) for line in hist[1:]]
    assert all(w >= 0 for w in weights)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "detect-rotation"
    assert manifest["seed"] == 9
    assert manifest["config"]["sampling"]["samples"] == 60
    assert manifest["kernels"] in {"compiled", "numpy"}
    summary = json.loads((out / "summary.json").read_text())
    assert summary  # non-empty


def test_output_root_env_var(tmp_path):
    path = _write_config(tmp_path, SMALL_CONFIG, name="tiny.json")
    proc = _run("run", str(path), env={"BOSONIC_QPE_OUTPUT": str(tmp_path / "root")})
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "root" / "tiny" / "histogram.csv").exists()


def test_seed_flag_overrides_config(tmp_path):
    path = _write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / "a"
    _run("run", str(path), "--output-dir", str(out), "--seed", "77")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 77


def test_histograms_identical_across_worker_counts(tmp_path):
    path = _write_config(tmp_path, SMALL_CONFIG)
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    p1 = _run("run", str(path), "--output-dir", str(out1), "--workers", "1")
    p2 = _run("run", str(path), "--output-dir", str(out2), "--workers", "3")
    assert p1.returncode == 0 and p2.returncode == 0
    assert (out1 / "histogram.csv").read_bytes() == (out2 / "histogram.csv").read_bytes()
