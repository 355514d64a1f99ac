import pytest
import yaml

from prbcoord.cli import main, topology_report
from prbcoord.config import ConfigError, RunConfig, dump_config, from_dict, load_config, to_dict


def test_topology_default(capsys):
    assert main(["topology"]) == 0
    assert "total=156 unique=116" in capsys.readouterr().out


def test_topology_one_cell(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({
        "topology": {"cells": [{"id": 1, "prbs": 52, "priority": 1}], "overlaps": []},
        "users": [{"id": 0, "profile": "sdr_embb", "cell": 1}],
    }))
    assert main(["topology", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "regions" not in out and "total=52 unique=52" in out


def test_invalid_region_size_names_field(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"topology": {"overlaps": [{"cells": [1, 2], "prbs": 0}]}}))
    assert main(["topology", "--config", str(cfg)]) == 1
    assert "topology" in capsys.readouterr().err


def test_unknown_field_names_path():
    with pytest.raises(ConfigError) as e:
        from_dict({"ppo": {"learning_rat": 0.1}})
    assert e.value.path == "ppo.learning_rat"
    with pytest.raises(ConfigError) as e:
        from_dict({"users": [{"id": 0, "profile": "nope", "cell": 1}]})
    assert e.value.path == "users[0].profile"
    with pytest.raises(ConfigError) as e:
        from_dict({"harness": {"eval_steps": "many"}})
    assert e.value.path == "harness.eval_steps"


def test_config_round_trip():
    cfg = RunConfig()
    assert from_dict(yaml.safe_load(dump_config(cfg))) == cfg
    assert to_dict(from_dict({"seed": 4}))["seed"] == 4


def test_env_overrides():
    cfg = load_config(environ={"PRBCOORD_SEED": "17", "PRBCOORD_OUT": "/tmp/x"})
    assert (cfg.seed, cfg.output_dir) == (17, "/tmp/x")
    with pytest.raises(ConfigError):
        load_config(environ={"PRBCOORD_SEED": "abc"})


def test_topology_report_lists_regions():
    text = topology_report(RunConfig())
    assert "region 0" in text and "region 1" in text


def test_bogus_agent_is_usage_error(capsys):
    assert main(["train", "--agent", "bogus"]) == 1


def test_unknown_strategy_is_usage_error(tmp_path):
    assert main(["eval", "--strategies", "foo", "--out", str(tmp_path)]) == 1


def test_train_default_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PRBCOORD_OUT", raising=False)
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"env": {"train_episode_len": 5}}))
    assert main(["train", "--agent", "ppo", "--episodes", "2", "--config", str(cfg)]) == 0
    assert (tmp_path / "runs" / "default" / "ppo.ckpt").exists()


def test_eval_missing_checkpoint_others_proceed(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"harness": {"eval_episodes": 1, "eval_steps": 4}}))
    code = main(["eval", "--config", str(cfg), "--out", str(tmp_path), "--strategies", "ppo,sa-va-pf,nsa-pf"])
    assert code == 0
    assert "ppo" in capsys.readouterr().err
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["sa-va-pf", "nsa-pf"]


def test_eval_all_five_and_plot(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"env": {"train_episode_len": 4}, "harness": {"eval_episodes": 1, "eval_steps": 4}}))
    for agent in ("ppo", "dqn"):
        assert main(["train", "--agent", agent, "--episodes", "2", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["ppo", "dqn", "sa-va-pf", "sa-ca-pf", "nsa-pf"]

    plots = tmp_path / "plots"
    assert main(["plot", str(tmp_path / "records.csv"), "--out", str(plots)]) == 0
    table = (plots / "throughput_table.md").read_text().splitlines()
    assert [line.split("|")[1].strip() for line in table[2:]] == ["PPO", "DQN", "SA-VA-PF", "SA-CA-PF", "NSA-PF"]
    first = (plots / "lost_prbs.svg").read_bytes()
    assert main(["plot", str(tmp_path / "records.csv"), "--out", str(plots)]) == 0
    assert (plots / "lost_prbs.svg").read_bytes() == first


def test_plot_empty_records_is_error(tmp_path):
    from prbcoord.harness import RECORD_COLUMNS
    path = tmp_path / "r.csv"
    path.write_text(",".join(RECORD_COLUMNS) + "\n")
    assert main(["plot", str(path), "--out", str(tmp_path / "p")]) == 1


def test_corrupt_checkpoint_reported(tmp_path, capsys):
    (tmp_path / "dqn.ckpt").write_bytes(b"garbage!")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"harness": {"eval_episodes": 1, "eval_steps": 2}}))
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path), "--strategies", "dqn,sa-ca-pf"]) == 0
    assert "unreadable checkpoint" in capsys.readouterr().err
