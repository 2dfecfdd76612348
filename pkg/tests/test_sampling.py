# -*- coding: utf-8 -*-
import numpy as np
import pytest
from scipy.stats import chisquare, kstest

from ha_core import in_unsafe, model_from_dict
from sampling import (
    DatasetFormatError,
    DatasetGenerator,
    SamplingError,
    balanced_sample,
    concat_datasets,
    dynamics_aware_sample,
    load_dataset,
    parametric_sample,
    read_meta,
    save_dataset,
    uniform_sample,
)
from simulation import Label, reach_oracle

# x' = r, x >= 2 위험, T = 1 -> x in [2 - r, 2) 이 양성
RAMP = {
    "id": "ramp",
    "variables": ["x"],
    "parameters": [{"name": "r", "default": 1.0, "interval": [0.5, 1.5]}],
    "modes": [{"id": "a", "flow": {"x": "r"}}],
    "unsafe": "x >= 2",
    "domain": {"x": [0, 2]},
    "init": {"x": [0, 0.5]},
    "unsafe_box": {"x": [2, 3]},
    "T": 1,
}


@pytest.fixture(scope="module")
def ramp():
    return model_from_dict(RAMP)


def test_uniform_labels_match_oracle(ramp):
    ds = uniform_sample(ramp, 40, rng_seed=3)
    assert len(ds) == 40
    for sample in ds:
        x = sample.state.x[0]
        assert 0.0 <= x <= 2.0
        assert sample.label == (Label.POSITIVE if x >= 1.0 else Label.NEGATIVE)
    assert sum(ds.counts.values()) == 40


def test_uniform_picks_modes_uniformly():
    ha = model_from_dict({
        "id": "two-modes",
        "variables": ["x"],
        "modes": [{"id": "narrow", "flow": {"x": "0"}, "invariant": "x <= 0.1"},
                  {"id": "wide", "flow": {"x": "0"}}],
        "unsafe": "x >= 5",
        "domain": {"x": [0, 1]},
        "T": 0.1,
    })
    ds = uniform_sample(ha, 2000, rng_seed=1)
    modes = np.array([s.state.mode for s in ds])
    counts = [int(np.sum(modes == m)) for m in ("narrow", "wide")]
    assert 0.45 < counts[0] / len(ds) < 0.55
    assert chisquare(counts).pvalue > 0.001
    assert all(s.state.x[0] <= 0.1 for s in ds if s.state.mode == "narrow")


@pytest.mark.slow
def test_uniform_axes_pass_ks_test():
    ha = model_from_dict({
        "id": "box",
        "variables": ["x", "y"],
        "modes": [{"id": "a", "flow": {"x": "0", "y": "0"}}],
        "unsafe": "x >= 5",
        "domain": {"x": [0, 1], "y": [-2, 3]},
        "T": 0.1,
    })
    ds = uniform_sample(ha, 10_000, rng_seed=5)
    xs = np.array([s.state.x for s in ds])
    assert kstest(xs[:, 0], "uniform", args=(0, 1)).pvalue > 0.01
    assert kstest(xs[:, 1], "uniform", args=(-2, 5)).pvalue > 0.01


def test_uniform_is_reproducible(ramp):
    a = uniform_sample(ramp, 20, rng_seed=5)
    b = uniform_sample(ramp, 20, rng_seed=5)
    c = uniform_sample(ramp, 20, rng_seed=6)
    assert a.samples == b.samples
    assert a.samples != c.samples


def test_balanced_counts_and_order(ramp):
    ds = balanced_sample(ramp, 20, rng_seed=1)
    assert ds.counts == {"positive": 10, "negative": 10}
    labels = ds.labels().tolist()
    assert labels == [0] * 10 + [1] * 10
    for sample in ds:
        assert not in_unsafe(ramp, sample.state)
        assert reach_oracle(ramp, sample.state) == sample.label


@pytest.mark.parametrize("n", [0, 1, 7])
def test_balanced_needs_even_n(ramp, n):
    with pytest.raises(ValueError):
        balanced_sample(ramp, n)


def test_jobs_do_not_change_result(ramp):
    serial = uniform_sample(ramp, 30, rng_seed=9, jobs=1)
    parallel = uniform_sample(ramp, 30, rng_seed=9, jobs=2)
    assert serial.samples == parallel.samples


def test_dynamics_aware_pool(ramp):
    ds = dynamics_aware_sample(ramp, 30, rng_seed=2, n_seeds=5, grid_points=20)
    assert len(ds) == 30
    assert ds.config["n_seeds"] == 5
    assert ds.config["grid_delta"] == pytest.approx(2.0 / 20)
    assert all(s.strategy == "dynamics" for s in ds)
    assert all(not in_unsafe(ramp, s.state) for s in ds)


def test_dynamics_horizon_must_exceed_T(ramp):
    with pytest.raises(ValueError):
        dynamics_aware_sample(ramp, 10, T_prime=0.5)


def test_dynamics_needs_init_region():
    data = {k: v for k, v in RAMP.items() if k != "init"}
    with pytest.raises(SamplingError):
        dynamics_aware_sample(model_from_dict(data), 10)


def test_parametric_sample_draws_parameters(ramp):
    ds = parametric_sample(ramp, 30, ["r"], rng_seed=4)
    rs = {s.state.p[0] for s in ds}
    assert len(rs) > 1
    assert all(0.5 <= r <= 1.5 for r in rs)
    for sample in ds:
        assert sample.label == reach_oracle(ramp, sample.state)


def test_unknown_active_parameter(ramp):
    with pytest.raises(SamplingError):
        DatasetGenerator(ramp, active_params=["zz"])


def test_csv_roundtrip_is_exact(ramp, tmp_path):
    ds = parametric_sample(ramp, 25, ["r"], rng_seed=8)
    path = str(tmp_path / "ramp.csv")
    save_dataset(ds, path, {"config_hash": "abc"})
    back = load_dataset(path, ramp)
    assert back.samples == ds.samples
    meta = read_meta(path)
    assert meta["config_hash"] == "abc"
    assert meta["counts"] == ds.counts


def test_load_checks_model_dimensions(ramp, neuron, tmp_path):
    path = str(tmp_path / "ramp.csv")
    save_dataset(uniform_sample(ramp, 5), path)
    with pytest.raises(DatasetFormatError):
        load_dataset(path, neuron)


@pytest.mark.parametrize("content", [
    "mode,x,r,label,strategy,seed\n",
    '# meta {"model_id": "ramp"}\n',
    "# meta {not json\n",
    '# meta {"model_id": "ramp", "variables": ["x"], "parameters": ["r"]}\nmode,x,label\n',
    '# meta {"model_id": "ramp", "variables": ["x"], "parameters": ["r"]}\n'
    "mode,x,r,label,strategy,seed\na,0.5,1,2,uniform,1\n",
    '# meta {"model_id": "ramp", "variables": ["x"], "parameters": ["r"]}\n'
    "mode,x,r,label,strategy,seed\na,abc,1,0,uniform,1\n",
])
def test_malformed_dataset(tmp_path, content):
    path = tmp_path / "bad.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_dataset(str(path))


def test_missing_dataset_file(tmp_path):
    with pytest.raises(DatasetFormatError):
        load_dataset(str(tmp_path / "none.csv"))


def test_concat(ramp):
    a = uniform_sample(ramp, 6, rng_seed=1)
    b = balanced_sample(ramp, 4, rng_seed=1)
    both = concat_datasets([a, b])
    assert len(both) == 10
    assert both.config["strategy"] == "uniform+balanced"
    with pytest.raises(ValueError):
        concat_datasets([])


def test_to_frame_columns(ramp):
    df = uniform_sample(ramp, 3).to_frame()
    assert list(df.columns) == ["mode", "x", "r", "label", "strategy", "seed"]
