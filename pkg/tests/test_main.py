# -*- coding: utf-8 -*-
import json
import os

import pytest

from constants import SEED_ENV_VAR
from main import build_parser, main
from sampling import load_dataset, read_meta

RAMP = {
    "id": "ramp",
    "variables": ["x"],
    "modes": [{"id": "a", "flow": {"x": "1"}}],
    "unsafe": "x >= 2",
    "domain": {"x": [0, 2]},
    "unsafe_box": {"x": [2, 3]},
    "init": {"x": [0, 0.5]},
    "T": 1,
}


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    model = tmp_path / "ramp.json"
    model.write_text(json.dumps(RAMP), encoding="utf-8")
    out = tmp_path / "out"
    return {"model": str(model), "out": str(out)}


def _run(ws, *argv):
    return main([argv[0], "--model", ws["model"], "--output-dir", ws["out"], "-q", *argv[1:]])


def _generate(ws, name, strategy="uniform", n=40, seed=1):
    assert _run(ws, "generate", "--strategy", strategy, "--n", str(n), "--seed", str(seed), "--name", name) == 0
    return os.path.join(ws["out"], name)


def test_generate_writes_dataset_with_meta(workspace):
    path = _generate(workspace, "train.csv", "balanced", 20)
    ds = load_dataset(path)
    assert ds.counts == {"positive": 10, "negative": 10}
    meta = read_meta(path)
    assert meta["command"] == "generate"
    assert meta["seed"] == 1
    assert len(meta["config_hash"]) == 64


def test_env_seed_overrides_flag(workspace, monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "77")
    path = _generate(workspace, "env.csv")
    assert read_meta(path)["seed"] == 77


def test_train_eval_is_reproducible(workspace):
    train = _generate(workspace, "train.csv", "balanced", 40, seed=1)
    test = _generate(workspace, "test.csv", "uniform", 50, seed=2)
    assert _run(workspace, "train", "--data", train, "--arch", "BDT", "--name", "c.json") == 0
    clf = os.path.join(workspace["out"], "c.json")

    reports = []
    for _ in range(2):
        assert _run(workspace, "eval", "--classifier", clf, "--data", test, "--name", "eval.json") == 0
        with open(os.path.join(workspace["out"], "eval.json"), "rb") as f:
            reports.append(f.read())
    assert reports[0] == reports[1]
    report = json.loads(reports[0])
    assert report["meta"]["command"] == "eval"
    assert report["report"]["n"] == 50


def test_train_mlp_writes_curve(workspace):
    train = _generate(workspace, "train.csv", "balanced", 20)
    assert _run(workspace, "train", "--data", train, "--arch", "SNN", "--max-epochs", "5",
                "--name", "snn.json") == 0
    assert os.path.exists(os.path.join(workspace["out"], "snn_curve.csv"))


def test_falsify_writes_summary(workspace):
    train = _generate(workspace, "train.csv", "balanced", 20)
    assert _run(workspace, "train", "--data", train, "--arch", "BDT", "--name", "c.json") == 0
    clf = os.path.join(workspace["out"], "c.json")
    assert _run(workspace, "falsify", "--classifier", clf, "--population", "10", "--generations", "2",
                "--name", "fn.csv") == 0
    with open(os.path.join(workspace["out"], "ramp_falsify.json"), encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["evaluations"] == 20
    assert summary["fn_found"] == len(load_dataset(os.path.join(workspace["out"], "fn.csv")))


def test_simulate_writes_outputs(workspace):
    assert _run(workspace, "simulate", "--x", "0.5", "--T", "3", "--name", "traj") == 0
    with open(os.path.join(workspace["out"], "traj.json"), encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["status"] == "hit_unsafe"
    assert summary["status_time"] == pytest.approx(1.5, abs=1e-6)
    assert os.path.exists(os.path.join(workspace["out"], "traj.csv"))
    assert os.path.exists(os.path.join(workspace["out"], "traj.svg"))


def test_concat(workspace):
    a = _generate(workspace, "a.csv", n=5)
    b = _generate(workspace, "b.csv", n=7, seed=2)
    assert _run(workspace, "concat", "--inputs", a, b, "--name", "ab.csv") == 0
    assert len(load_dataset(os.path.join(workspace["out"], "ab.csv"))) == 12


def test_errors_are_reported_as_json(workspace, capsys):
    code = _run(workspace, "eval", "--classifier", "missing.json", "--data", "missing.csv")
    assert code == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["command"] == "eval"
    assert error["error"] == "DatasetFormatError"
    assert error["message"]


def test_invalid_config_value_exits_with_error(workspace, capsys):
    assert _run(workspace, "generate", "--n", "4", "--jobs", "0") == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "ConfigError"


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
