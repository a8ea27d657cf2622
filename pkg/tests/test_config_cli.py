import csv
import json
import os

import numpy as np
import pytest

from adaptsched.cli import main
from adaptsched.config import (
    ConfigError,
    ExperimentConfig,
    emit_config,
    load_config,
    parse_config,
)
from adaptsched.experiment import (
    EVAL_CSV_HEADER,
    TRAIN_CSV_HEADER,
    eval_campaign,
    train_campaign,
)
from adaptsched.selftest import run_selftest


def desk_config(tmp_path, episodes=3, eval_episodes=2) -> ExperimentConfig:
    config = ExperimentConfig()
    config.agent.episodes = episodes
    config.agent.batch_size = 8
    config.eval_episodes = eval_episodes
    config.out_dir = str(tmp_path)
    return config


# ---------------------------------------------------------------- config

def test_defaults_reproduce_reference_setup():
    config = ExperimentConfig()
    assert config.sim.num_users == 10
    assert config.sim.num_resources == 16
    assert config.sim.job_probability == 0.2
    assert config.sim.tx_snr_db == 13.0
    assert config.sim.steps_per_episode == 50
    assert config.sim.profile_names.count("normal") == 5
    assert config.sim.profile_names.count("high_datarate") == 2
    assert config.sim.profile_names.count("low_latency") == 2
    assert config.sim.profile_names.count("emergency_vehicle") == 1
    assert config.agent.gamma == 0.9
    assert config.agent.epsilon_start == 0.99
    assert config.agent.epsilon_end == 0.0
    assert config.agent.epsilon_decay_fraction == 0.8
    assert config.agent.batch_size == 64
    assert config.agent.learning_rate == 1e-4
    assert config.agent.episodes == 10_000
    assert (config.reward.capacity, config.reward.packet_rate) == (0.25, 0.25)
    assert (config.reward.timeout, config.reward.timeout_ev) == (1.0, 1.0)


def test_empty_config_equals_defaults():
    assert parse_config("") == ExperimentConfig()


def test_config_round_trip_identity():
    config = ExperimentConfig()
    config.sim.seed = 31
    config.sim.tx_snr_db = 7.25
    config.agent.learning_rate = 3.5e-5
    config.eval_policies = ("dqn", "mt")
    config.mmf_strict_cap = False
    assert parse_config(emit_config(config)) == config
    assert emit_config(parse_config(emit_config(config))) == emit_config(config)


def test_unknown_keys_are_named():
    with pytest.raises(ConfigError, match=r"\[nope\]"):
        parse_config("[nope]\nx = 1\n")
    with pytest.raises(ConfigError, match="sim.bogus"):
        parse_config("[sim]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="agent.gamma"):
        parse_config("[agent]\ngamma = fast\n")


def test_profile_length_mismatch_names_field():
    with pytest.raises(ConfigError, match="profile_names"):
        parse_config("[sim]\nnum_users = 3\nprofiles = normal, normal\n")


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/experiment.ini")


# ---------------------------------------------------------------- training cmd

def test_training_csv_schema_and_rows(tmp_path):
    config = desk_config(tmp_path, episodes=3)
    result = train_campaign(config)
    with open(result.csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TRAIN_CSV_HEADER
    assert len(rows) == 4
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert os.path.exists(result.checkpoint_path)


def test_zero_episode_training_writes_header_only(tmp_path):
    config = desk_config(tmp_path, episodes=0)
    result = train_campaign(config)
    with open(result.csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows == [TRAIN_CSV_HEADER]


def test_train_checkpoint_digest_deterministic(tmp_path):
    import hashlib

    digests = []
    for sub in ("a", "b"):
        config = desk_config(tmp_path / sub, episodes=2)
        config.sim.seed = 5
        result = train_campaign(config)
        digests.append(hashlib.sha256(open(result.checkpoint_path, "rb").read()).hexdigest())
    assert digests[0] == digests[1]


# ---------------------------------------------------------------- eval cmd

def test_eval_fixed_baselines_need_no_checkpoint(tmp_path):
    config = desk_config(tmp_path, eval_episodes=2)
    result = eval_campaign(config, policies=("mt", "mmf", "ds", "evp"), episodes=2)
    assert len(result["rows"]) == 8


def test_eval_dqn_without_checkpoint_fails(tmp_path):
    config = desk_config(tmp_path)
    with pytest.raises(ValueError, match="checkpoint"):
        eval_campaign(config, policies=("dqn",), episodes=1)


def test_eval_csv_schema_row_count_and_rates(tmp_path):
    config = desk_config(tmp_path, episodes=2, eval_episodes=3)
    trained = train_campaign(config)
    result = eval_campaign(config, params=trained.agent.online, episodes=3)
    with open(result["csv_path"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == EVAL_CSV_HEADER
    assert len(rows) == 1 + 5 * 3  # header + policies x episodes
    summary = result["summary"]
    for policy, stats in summary["policies"].items():
        assert sum(stats["selection_rates"]) == pytest.approx(1.0, abs=1e-9)
    # fixed policies select only themselves
    for row in rows[1:]:
        if row[0] == "mt":
            assert [row[8], row[9], row[10], row[11]] == ["50", "0", "0", "0"]
    assert isinstance(summary["max_reward_sum"], float)


def test_eval_workers_do_not_change_results(tmp_path):
    config = desk_config(tmp_path / "w1", eval_episodes=4)
    serial = eval_campaign(config, policies=("mt", "ds"), episodes=4)
    config.out_dir = str(tmp_path / "w2")
    threaded = eval_campaign(config, policies=("mt", "ds"), episodes=4, workers=4)
    assert serial["rows"] == threaded["rows"]


def test_eval_csv_byte_determinism(tmp_path):
    blobs = []
    for sub in ("r1", "r2"):
        config = desk_config(tmp_path / sub, episodes=2, eval_episodes=3)
        config.sim.seed = 17
        trained = train_campaign(config)
        result = eval_campaign(config, params=trained.agent.online, episodes=3)
        blobs.append(open(result["csv_path"], "rb").read())
    assert blobs[0] == blobs[1]


# ---------------------------------------------------------------- CLI surface

def test_cli_train_and_eval_round_trip(tmp_path, capsys):
    out = tmp_path / "run"
    conf = tmp_path / "exp.ini"
    conf.write_text("[agent]\nepisodes = 2\nbatch_size = 8\n")
    assert main(["train", "--config", str(conf), "--seed", "3", "--out-dir", str(out)]) == 0
    assert main(
        [
            "eval", "--config", str(conf), "--seed", "3", "--out-dir", str(out),
            "--episodes", "2", "--checkpoint", str(out / "checkpoint.qnet"),
            "--policy", "dqn", "--policy", "mt",
        ]
    ) == 0
    captured = capsys.readouterr()
    assert "max reward sum" in captured.out
    data = json.load(open(out / "eval_summary.json"))
    assert set(data["policies"]) == {"dqn", "mt"}


def test_cli_bad_config_exits_2(tmp_path, capsys):
    conf = tmp_path / "bad.ini"
    conf.write_text("[sim]\nnum_users = banana\n")
    assert main(["train", "--config", str(conf)]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_missing_checkpoint_exits_2(tmp_path, capsys):
    assert main(["eval", "--out-dir", str(tmp_path), "--policy", "dqn", "--episodes", "1"]) == 2


# ---------------------------------------------------------------- selftest

def test_selftest_passes_clean_build():
    results = run_selftest()
    assert all(ok for _, ok, _ in results), results


def test_selftest_detects_injected_gradient_bug(capsys):
    results = run_selftest(inject_gradient_bug=True)
    status = {name: ok for name, ok, _ in results}
    assert status["gradients"] is False
    assert main(["selftest", "--inject-gradient-bug"]) == 1


def test_cli_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6
