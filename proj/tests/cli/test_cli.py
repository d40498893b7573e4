import json
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("DRIFTKILL_BIN", str(Path(__file__).resolve().parents[2] / "build" / "driftkill"))

SMALL = """\
seed: 3
synth:
  - {scenario: jerk, kind: jerk, split: train, drives: 4, duration: 60}
  - {scenario: jerk, kind: jerk, split: test, drives: 1, duration: 60}
train:
  displacement: {epochs: 3, time_steps: 4, batch_size: 64, dropout: 0.0}
  orientation: {epochs: 3, time_steps: 2, batch_size: 64, dropout: 0.0}
windows: {history: 4}
sweep: {min_steps: 2, max_steps: 4}
"""


def run(*args, env=None, cwd=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([BIN, *args], capture_output=True, text=True, env=full_env, cwd=cwd)


def write(path, text):
    path.write_text(text)
    return str(path)


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_minimal_straight_spec(tmp_path):
    cfg = write(tmp_path / "c.yaml", "synth:\n  - spec: {kind: straight, duration: 10, v0: 20}\n")
    out = tmp_path / "out"
    r = run("synth", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    lines = (out / "data" / "straight_train.csv").read_text().splitlines()
    assert len(lines) == 101  # header + 100 records
    m = manifest(out)
    assert set(m["artifacts"]) == {"data/straight_train.csv"}
    assert len(m["runs"]["synth"]["config_sha256"]) == 64
    assert m["runs"]["synth"]["scenarios"][0]["corruption"] == "consumer-imu"


def test_existing_output_needs_force(tmp_path):
    cfg = write(tmp_path / "c.yaml", "synth:\n  - spec: {kind: straight, duration: 10}\n")
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", str(out)).returncode == 0
    before = snapshot(out)
    r = run("synth", "--config", cfg, "--out", str(out), "--seed", "9")
    assert r.returncode == 2
    assert "--force" in r.stderr
    assert snapshot(out) == before
    assert run("synth", "--config", cfg, "--out", str(out), "--seed", "9", "--force").returncode == 0
    assert snapshot(out) != before


def test_two_scenarios_share_one_manifest(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        "synth:\n"
        "  - spec: {kind: straight, duration: 10}\n"
        "  - {kind: roundabout, drives: 2, duration: 20, split: test}\n",
    )
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", str(out)).returncode == 0
    assert sorted(p.name for p in (out / "data").iterdir()) == ["roundabout_test.csv", "straight_train.csv"]
    assert len(manifest(out)["artifacts"]) == 2


@pytest.mark.parametrize(
    "text, line",
    [
        ("seed: 1\nsynth:\n  - {kind: straight, colour: red}\n", 3),
        ("seed: 1\n\ntrain:\n  displacement:\n    epochs: many\n", 5),
        ("seed: 1\nsynth: [\n", 3),
        ("synth:\n  - spec: {kind: hard_brake, decel: -1.0}\n", 2),
        ("synth:\n  - {kind: straight}\n  - {kind: straight}\n", None),
    ],
)
def test_config_errors_exit_2_with_location(tmp_path, text, line):
    cfg = write(tmp_path / "c.yaml", text)
    r = run("synth", "--config", cfg, "--out", str(tmp_path / "out"))
    assert r.returncode == 2
    if line is not None:
        assert f"c.yaml:{line}:" in r.stderr
    assert not (tmp_path / "out").exists()


def test_train_eval_pipeline(tmp_path):
    cfg = write(tmp_path / "c.yaml", SMALL)
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", str(out)).returncode == 0
    r = run("train", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    models = out / "models"
    assert sorted(p.name for p in models.iterdir()) == [
        "displacement.json",
        "displacement_loss.csv",
        "orientation.json",
        "orientation_loss.csv",
    ]
    assert len((models / "displacement_loss.csv").read_text().splitlines()) == 4

    first = snapshot(models)
    assert run("train", "--config", cfg, "--out", str(out), "--force").returncode == 0
    assert snapshot(models) == first

    r = run("eval", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    text = (out / "reports" / "jerk.txt").read_text()
    assert "INS DR" in text and "Number of sequences evaluated" in text
    plots = list((out / "reports" / "plots" / "jerk").iterdir())
    assert plots and all(p.read_text().startswith("t,error") for p in plots)

    reports = snapshot(out / "reports")
    assert run("eval", "--config", cfg, "--out", str(out), "--force").returncode == 0
    assert snapshot(out / "reports") == reports
    assert set(manifest(out)["runs"]) == {"synth", "train", "eval"}


def test_zero_epochs_warns(tmp_path):
    cfg = write(tmp_path / "c.yaml", SMALL.replace("displacement: {epochs: 3", "displacement: {epochs: 0"))
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", str(out)).returncode == 0
    r = run("train", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert "epochs = 0" in r.stderr
    assert (out / "models" / "displacement_loss.csv").read_text() == "epoch,loss\n"


def test_divergence_exits_4(tmp_path):
    cfg = write(tmp_path / "c.yaml", SMALL.replace("dropout: 0.0}", "dropout: 0.0, learning_rate: 1.0e+300}", 1))
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", str(out)).returncode == 0
    r = run("train", "--config", cfg, "--out", str(out))
    assert r.returncode == 4, r.stderr
    assert not (out / "models").exists()


def test_data_errors_exit_3(tmp_path):
    cfg = write(tmp_path / "c.yaml", SMALL)
    out = tmp_path / "out"
    assert run("train", "--config", cfg, "--out", str(out)).returncode == 3  # synth not run
    no_test = write(tmp_path / "n.yaml", "synth:\n  - {kind: jerk, drives: 2, duration: 30}\n")
    assert run("synth", "--config", no_test, "--out", str(out)).returncode == 0
    assert run("train", "--config", no_test, "--out", str(out)).returncode == 0
    r = run("eval", "--config", no_test, "--out", str(out))
    assert r.returncode == 3
    assert "empty test set" in r.stderr


def test_sweep_table_and_err_cells(tmp_path):
    # 4 s training drives hold three windows: n_steps 2 trains, 3 and 4 are too short.
    cfg = write(
        tmp_path / "c.yaml",
        SMALL.replace("drives: 4, duration: 60}", "drives: 6, duration: 4}"),
    )
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", str(out)).returncode == 0
    r = run("sweep", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    rows = (out / "sweep" / "displacement.csv").read_text().splitlines()
    assert len(rows) == 4  # header + n_steps 2..4
    assert "ERR" not in rows[1] and "ERR" in rows[2] and "ERR" in rows[3]
    first = snapshot(out / "sweep")
    assert run("sweep", "--config", cfg, "--out", str(out), "--force").returncode == 0
    assert snapshot(out / "sweep") == first


def test_templates_parse(tmp_path):
    for name in ("paper-defaults", "desk-scale"):
        r = run("template", "--preset", name)
        assert r.returncode == 0 and "learning_rate" in r.stdout
        path = write(tmp_path / f"{name}.yaml", r.stdout)
        # Parses cleanly; stops at the missing data with a data error.
        assert run("train", "--config", path, "--out", str(tmp_path / name)).returncode == 3
    assert run("template", "--preset", "nope").returncode == 2


def test_log_level_from_environment(tmp_path):
    cfg = write(tmp_path / "c.yaml", SMALL)
    out = tmp_path / "out"
    run("synth", "--config", cfg, "--out", str(out))
    quiet = run("train", "--config", cfg, "--out", str(out), env={"DRIFTKILL_LOG": "error"})
    assert quiet.returncode == 0 and quiet.stderr == ""
    chatty = run("train", "--config", cfg, "--out", str(out), "--force", env={"DRIFTKILL_LOG": "debug"})
    assert "[debug]" in chatty.stderr
