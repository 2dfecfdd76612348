# -*- coding: utf-8 -*-
import json

import pandas as pd
import pytest

from constants import SEED_ENV_VAR
from experiment import (
    ConfigError,
    ExperimentConfig,
    canonical_json,
    config_hash,
    load_config,
    output_meta,
    write_frame_csv,
    write_json,
)
from sampling import read_meta


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def test_defaults_are_valid():
    cfg = ExperimentConfig()
    assert cfg.arch == "DNN-S"
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_hash_is_stable_and_sensitive():
    a, b = ExperimentConfig(), ExperimentConfig()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 64
    assert ExperimentConfig(seed=1).config_hash() != a.config_hash()
    assert config_hash({"x": 1, "y": 2}) == config_hash({"y": 2, "x": 1})
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


@pytest.mark.parametrize("data", [
    {"modle": "neuron"},
    {"strategy": "random"},
    {"arch": "SVM"},
    {"theta": 1.5},
    {"jobs": 0},
    {"train": {"max_epochs": -1}},
    {"train": {"epochs": 3}},
    {"ga": {"population": 1}},
    {"sprt": {"alpha": 0.7}},
])
def test_invalid_config(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_overrides_merge_nested_sections():
    cfg = ExperimentConfig().with_overrides({
        "seed": 5, "arch": None,
        "ga": {"population": 10, "generations": None},
        "sprt": {"delta": None},
    })
    assert cfg.seed == 5
    assert cfg.arch == "DNN-S"
    assert cfg.ga.population == 10
    assert cfg.ga.generations == ExperimentConfig().ga.generations
    assert ExperimentConfig().with_overrides({"seed": None}) == ExperimentConfig()


def test_load_config_precedence(tmp_path, monkeypatch):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"model": "pendulum", "seed": 3, "train": {"max_epochs": 10}}), encoding="utf-8")
    cfg = load_config(str(path))
    assert (cfg.model, cfg.seed, cfg.train.max_epochs) == ("pendulum", 3, 10)

    cfg = load_config(str(path), {"seed": 4, "train": {"max_epochs": None}})
    assert (cfg.seed, cfg.train.max_epochs) == (4, 10)

    monkeypatch.setenv(SEED_ENV_VAR, "42")
    cfg = load_config(str(path), {"seed": 4})
    assert cfg.seed == 42


def test_env_seed_must_be_integer(monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "abc")
    with pytest.raises(ConfigError):
        load_config()


@pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
def test_bad_config_file(tmp_path, content):
    path = tmp_path / "exp.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "none.json"))


def test_output_meta_carries_hash_and_seed():
    cfg = ExperimentConfig(seed=9)
    meta = output_meta(cfg, "eval", extra=1)
    assert meta["config_hash"] == cfg.config_hash()
    assert meta["seed"] == 9
    assert meta["command"] == "eval"
    assert meta["experiment"]["seed"] == 9
    assert meta["extra"] == 1


def test_write_json_is_sorted(tmp_path):
    path = tmp_path / "r.json"
    write_json(str(path), {"b": 1, "a": 2}, {"seed": 0})
    text = path.read_text(encoding="utf-8")
    assert text.endswith("}\n")
    assert list(json.loads(text)) == ["a", "b", "meta"]


def test_write_frame_csv_has_meta_line(tmp_path):
    path = tmp_path / "t.csv"
    write_frame_csv(str(path), pd.DataFrame({"theta": [0.5], "accuracy": [0.1]}), {"config_hash": "h", "model_id": "m",
                                                                                   "variables": [], "parameters": []})
    assert read_meta(str(path))["config_hash"] == "h"
    frame = pd.read_csv(path, skiprows=1)
    assert frame["accuracy"].tolist() == [0.1]
