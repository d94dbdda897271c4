import json
import os
import socket
import subprocess
import sys

import numpy as np
import pytest

from agvsim import trainer
from agvsim.cli import main
from agvsim.scenegraph import parse_scene


def run(argv):
    return main(argv)


TRAIN_FAST = ["--steps", "256", "--horizon", "128", "--minibatch", "32",
              "--epochs", "2", "--hidden", "8"]


class TestSceneCommands:
    def test_gen_validate_round_trip(self, tmp_path):
        out = tmp_path / "s.json"
        assert run(["scene", "gen", "--preset", "outdoor20", "--seed", "42",
                    "--out", str(out)]) == 0
        assert run(["scene", "validate", str(out)]) == 0

    def test_gen_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["scene", "gen", "--preset", "urban50", "--seed", "7", "--out", str(a)])
        run(["scene", "gen", "--preset", "urban50", "--seed", "7", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_validate_duplicate_id_fails(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "name": "x", "bounds": {"xmin": -1, "xmax": 1, "ymin": -1, "ymax": 1},
            "obstacles": [
                {"id": 1, "kind": "cylinder", "x": 0, "y": 0, "radius": 0.1},
                {"id": 1, "kind": "cylinder", "x": 0.5, "y": 0, "radius": 0.1}]}))
        assert run(["scene", "validate", str(bad)]) == 1
        assert "duplicate id" in capsys.readouterr().err

    def test_validate_missing_file(self, tmp_path):
        assert run(["scene", "validate", str(tmp_path / "none.json")]) == 1

    def test_unknown_preset_is_usage_error(self):
        with pytest.raises(SystemExit) as e:
            run(["scene", "gen", "--preset", "nosuch", "--out", "x.json"])
        assert e.value.code == 2


class TestTrainCommand:
    def test_artifact_contract(self, tmp_path):
        out = tmp_path / "r1"
        code = run(["train", "--env", "oval", "--task", "racing", "--seed", "42",
                    "--out", str(out)] + TRAIN_FAST)
        assert code == 0
        assert sorted(os.listdir(out)) == ["config.json", "policy.json", "returns.csv"]
        params = trainer.load_policy(out / "policy.json")
        assert params.obs_dim == 39
        snapshot = json.loads((out / "config.json").read_text())
        assert snapshot["env"]["preset"] == "oval"
        assert snapshot["ppo"]["seed"] == 42
        header = (out / "returns.csv").read_text().splitlines()[0]
        assert header == "episode,steps,return,moving_avg"

    def test_deterministic_returns_csv(self, tmp_path):
        args = ["train", "--env", "outdoor20", "--task", "search", "--seed", "11"]
        run(args + TRAIN_FAST + ["--out", str(tmp_path / "a")])
        run(args + TRAIN_FAST + ["--out", str(tmp_path / "b")])
        assert ((tmp_path / "a" / "returns.csv").read_bytes()
                == (tmp_path / "b" / "returns.csv").read_bytes())

    def test_unknown_env_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            run(["train", "--env", "nosuch", "--out", str(tmp_path)])
        assert e.value.code == 2

    def test_config_file_overrides(self, tmp_path):
        cfg = tmp_path / "env.json"
        cfg.write_text('{"max_steps": 40, "preset": "urban20"}')
        out = tmp_path / "run"
        run(["train", "--env", "oval", "--task", "search", "--seed", "1",
             "--config", str(cfg), "--out", str(out)] + TRAIN_FAST)
        snapshot = json.loads((out / "config.json").read_text())
        assert snapshot["env"]["preset"] == "urban20"
        assert snapshot["env"]["max_steps"] == 40


def zero_policy(path, obs_dim=39):
    p = trainer.init_policy(obs_dim, (4,), np.random.default_rng(0))
    for coll in (p.layers, p.value_layers):
        for i, (w, b) in enumerate(coll):
            coll[i] = (np.zeros_like(w), np.zeros_like(b))
    trainer.save_policy(path, p)
    return p


class TestRolloutCommand:
    def test_artifact_contract(self, tmp_path):
        policy = tmp_path / "p.json"
        zero_policy(policy)
        cfg = tmp_path / "env.json"
        cfg.write_text('{"max_steps": 30}')
        out = tmp_path / "evals"
        code = run(["rollout", "--policy", str(policy), "--env", "outdoor20",
                    "--episodes", "3", "--seed", "1", "--config", str(cfg),
                    "--out", str(out)])
        assert code == 0
        files = sorted(os.listdir(out))
        assert files == ["summary.csv", "traj_000.csv", "traj_001.csv", "traj_002.csv"]
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0] == "episode,seed,return,length,collided"
        assert len(summary) == 4

    def test_zero_policy_is_stationary(self, tmp_path):
        policy = tmp_path / "p.json"
        zero_policy(policy)
        cfg = tmp_path / "env.json"
        cfg.write_text('{"max_steps": 20}')
        out = tmp_path / "evals"
        run(["rollout", "--policy", str(policy), "--env", "outdoor20",
             "--episodes", "1", "--seed", "3", "--config", str(cfg),
             "--out", str(out)])
        rows = (out / "traj_000.csv").read_text().splitlines()[1:]
        xs = {row.split(",")[2] for row in rows}
        ys = {row.split(",")[3] for row in rows}
        assert len(xs) == 1 and len(ys) == 1  # mean action (0,0) -> stationary
        assert all(row.split(",")[8] == "0.0" for row in rows)  # T column

    def test_deterministic_trajectories(self, tmp_path):
        policy = tmp_path / "p.json"
        zero_policy(policy)
        cfg = tmp_path / "env.json"
        cfg.write_text('{"max_steps": 15}')
        for d in ("a", "b"):
            run(["rollout", "--policy", str(policy), "--env", "urban20",
                 "--episodes", "2", "--seed", "5", "--config", str(cfg),
                 "--out", str(tmp_path / d)])
        for name in ("traj_000.csv", "traj_001.csv", "summary.csv"):
            assert ((tmp_path / "a" / name).read_bytes()
                    == (tmp_path / "b" / name).read_bytes())

    def test_cross_preset_rollout_runs(self, tmp_path):
        policy = tmp_path / "p.json"
        zero_policy(policy)
        cfg = tmp_path / "env.json"
        cfg.write_text('{"max_steps": 10}')
        code = run(["rollout", "--policy", str(policy), "--env", "urban50",
                    "--task", "racing", "--episodes", "1", "--seed", "1",
                    "--config", str(cfg), "--out", str(tmp_path / "x")])
        assert code == 0

    def test_missing_policy_file(self, tmp_path):
        assert run(["rollout", "--policy", str(tmp_path / "none.json"),
                    "--env", "oval", "--out", str(tmp_path / "o")]) == 1

    def test_corrupt_policy_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["rollout", "--policy", str(bad), "--env", "oval",
                    "--out", str(tmp_path / "o")]) == 1


class TestServeCommand:
    def test_bind_failure_exits_1(self, capsys):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        blocker.listen()
        port = blocker.getsockname()[1]
        try:
            assert run(["serve", "--env", "urban50", "--task", "search",
                        "--port", str(port)]) == 1
            assert "cannot bind" in capsys.readouterr().err
        finally:
            blocker.close()

    def test_listening_banner_subprocess(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "agvsim.cli", "serve", "--env", "urban50",
             "--task", "search", "--port", "0"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        try:
            banner = proc.stdout.readline()
            assert "listening on" in banner
            assert "urban50" in banner
        finally:
            proc.terminate()
            proc.wait(timeout=10)


def test_help_lists_all_commands(capsys):
    with pytest.raises(SystemExit) as e:
        run(["--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("train", "rollout", "serve", "scene"):
        assert cmd in out
