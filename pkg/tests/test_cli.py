import csv
import json

import numpy as np
import pytest

from dogfight.cli import main
from dogfight.config import RunConfig
from dogfight.ddqn import QNetwork


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", "--steps", "1000", "--seed", "7", "--out", str(out)]) == 0
    return out


@pytest.fixture
def small_checkpoint(tmp_path):
    path = tmp_path / "net.npz"
    QNetwork((12, 16, 8), rng=np.random.default_rng(0)).save(path)
    return path


def test_train_smoke(trained):
    for name in ("config.txt", "checkpoint_final.npz", "train_log.csv", "outcomes.csv"):
        assert (trained / name).exists()
    rows = list(csv.DictReader(open(trained / "train_log.csv")))
    assert len(rows) == 1000
    assert np.isfinite(float(rows[-1]["loss"]))
    net = QNetwork.load(trained / "checkpoint_final.npz")
    assert net.sizes == (12, 512, 256, 8)


def test_train_same_seed_same_log(trained, tmp_path):
    assert main(["train", "--steps", "1000", "--seed", "7", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "train_log.csv").read_text() == (trained / "train_log.csv").read_text()


def test_resolved_config_written(trained):
    cfg = RunConfig.from_file(trained / "config.txt")
    assert cfg.steps == 1000 and cfg.seed == 7 and cfg.out == str(trained)


def test_evaluate_report(trained, tmp_path):
    rc = main(["evaluate", "--checkpoint", str(trained / "checkpoint_final.npz"), "--episodes", "2",
               "--strategy", "1,8", "--out", str(tmp_path)])
    assert rc == 0
    report = json.load(open(tmp_path / "report.json"))
    assert [r["strategy"] for r in report] == [1, 8]
    for r in report:
        assert r["win"] + r["loss"] + r["tie"] == pytest.approx(100.0)
    assert len(list(csv.reader(open(tmp_path / "report.csv")))) == 3


def test_evaluate_missing_checkpoint(tmp_path, capsys):
    rc = main(["evaluate", "--checkpoint", str(tmp_path / "nope.npz"), "--out", str(tmp_path)])
    assert rc == 1
    assert "CheckpointError" in capsys.readouterr().err
    assert main(["evaluate", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("scenario, mach", [("case1", 0.9), ("case2", 0.8)])
def test_duel_case_studies(tmp_path, scenario, mach):
    rc = main(["duel", "--scenario", scenario, "--blue", "dt:8", "--red", "dt:8", "--out", str(tmp_path)])
    assert rc == 0
    summary = json.load(open(tmp_path / "summary.json"))
    assert summary["scenario"] == scenario
    assert summary["outcome"] in ("win", "loss", "tie")
    traj = list(csv.DictReader(open(tmp_path / "trajectory.csv")))
    decisions = list(csv.DictReader(open(tmp_path / "decisions.csv")))
    assert len(decisions) == summary["steps"]
    first = [r for r in traj if r["side"] == "blue"][0]
    assert float(first["Ma"]) == pytest.approx(mach, abs=0.01)
    assert -float(first["p3"]) == pytest.approx(5000, abs=5)


def test_duel_with_checkpoint(tmp_path, small_checkpoint):
    rc = main(["duel", "--blue", str(small_checkpoint), "--seed", "2", "--out", str(tmp_path)])
    assert rc == 0
    decisions = list(csv.DictReader(open(tmp_path / "decisions.csv")))
    assert all(0 <= int(r["blue_action"]) < 8 for r in decisions)


def test_duel_bad_inputs(tmp_path, capsys):
    assert main(["duel", "--scenario", "case9", "--out", str(tmp_path)]) == 1
    assert "case9" in capsys.readouterr().err
    assert main(["duel", "--red", "dt:12", "--out", str(tmp_path)]) == 1
    assert main(["duel", "--red", str(tmp_path / "x.npz"), "--out", str(tmp_path)]) == 1


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed = 3\nwarp_drive = 9\n")
    assert main(["duel", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "warp_drive" in capsys.readouterr().err


def test_config_file_applies_and_flags_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 3\nmax_steps = 2\n")
    assert main(["duel", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path)]) == 0
    resolved = RunConfig.from_file(tmp_path / "config.txt")
    assert resolved.seed == 5 and resolved.max_steps == 2
    assert json.load(open(tmp_path / "summary.json"))["steps"] <= 2


def test_export(tmp_path, small_checkpoint):
    assert main(["export", "--checkpoint", str(small_checkpoint), "--out", str(tmp_path)]) == 0
    doc = json.load(open(tmp_path / "network.json"))
    assert doc["sizes"] == [12, 16, 8] and len(doc["layers"]) == 2
    net = QNetwork.load(small_checkpoint)
    x = np.linspace(-1, 1, 12)
    h = np.maximum(x @ np.array(doc["layers"][0]["weight"]) + doc["layers"][0]["bias"], 0)
    y = h @ np.array(doc["layers"][1]["weight"]) + doc["layers"][1]["bias"]
    assert np.allclose(y, net.forward(x), atol=1e-5)
