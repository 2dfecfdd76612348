# -*- coding: utf-8 -*-
import numpy as np
import pytest

from classifiers import (
    ClassifierFormatError,
    FeatureMap,
    TrainConfig,
    TrainingError,
    adapt_gd,
    bdt_classify,
    bdt_train,
    classifier_from_dict,
    classifier_to_dict,
    classify,
    fit_lm,
    forward,
    init_network,
    load_classifier,
    nbor_classify,
    nbor_train,
    save_classifier,
    train_classifier,
    train_lm,
)
from ha_core import load_model, model_from_dict
from sampling import Sample, SampleSet
from simulation import Label

LINE = model_from_dict({
    "id": "line",
    "variables": ["x"],
    "modes": [{"id": "a", "flow": {"x": "0"}}],
    "unsafe": "x >= 5",
    "domain": {"x": [0, 2]},
    "T": 1,
})

# 1차원 입력 [-1, 1]
FEATURE_1D = FeatureMap(("x",), ("a",), (), (), (-1.0,), (1.0,))


def _line_set(xs, labels):
    samples = [Sample(LINE.make_state("a", [x]), Label(int(b)), "uniform", i)
               for i, (x, b) in enumerate(zip(xs, labels))]
    return SampleSet("line", ("x",), (), samples)


def _step_set():
    xs = np.round(np.arange(0.05, 2.0, 0.1), 10)
    return _line_set(xs, xs > 1.0)


def test_feature_map_normalizes_domain(neuron):
    f = FeatureMap.for_model(neuron)
    assert f.n_inputs == 2
    X = f.encode([neuron.make_state("spiking", [-68.5, 25.0]), neuron.make_state("spiking", [30.0, 0.0])])
    assert X.tolist() == [[-1.0, 1.0], [1.0, -1.0]]


def test_feature_map_mode_encodings():
    cruise = load_model("cruise")
    assert FeatureMap.for_model(cruise).n_inputs == 4
    onehot = FeatureMap.for_model(cruise, mode_encoding="onehot")
    assert onehot.n_inputs == 9
    row = onehot.raw([cruise.make_state("mode3", [10.0, 0.0, 0.0])])[0]
    assert row[3:].tolist() == [0, 0, 1, 0, 0, 0]


def test_feature_map_active_parameters(neuron):
    f = FeatureMap.for_model(neuron, ["I"])
    assert f.n_inputs == 3
    X = f.encode([neuron.make_state("spiking", [0.0, 0.0], [0.02, 0.2, -65.0, 8.0, 60.0])])
    assert X[0, 2] == pytest.approx(1.0)


def test_nguyen_widrow_row_norms(neuron):
    c = init_network("DNN-S", FeatureMap.for_model(neuron), rng_seed=3)
    assert c.sizes == (2, 10, 10, 10, 1)
    norms = np.linalg.norm(c.weights[0], axis=1)
    assert norms == pytest.approx(np.full(10, 0.7 * 10 ** (1 / 2)))
    norms = np.linalg.norm(c.weights[1], axis=1)
    assert norms == pytest.approx(np.full(10, 0.7 * 10 ** (1 / 10)))


def test_softmax_output_is_probability(neuron):
    c = init_network("DNN-R", FeatureMap.for_model(neuron), rng_seed=1)
    F = c.scores_normalized(np.random.default_rng(0).uniform(-1, 1, (50, 2)))
    assert np.all((F > 0) & (F < 1))


@pytest.mark.parametrize("arch", ["DNN-S", "DNN-R", "SNN"])
def test_backprop_matches_finite_differences(neuron, arch):
    c = init_network(arch, FeatureMap.for_model(neuron), rng_seed=5)
    X = np.random.default_rng(1).uniform(-1, 1, (6, 2))
    _, J = c.jacobian(X)
    theta = c.parameters()
    h = 1e-6
    fd = np.empty_like(J)
    for k in range(len(theta)):
        step = np.zeros_like(theta)
        step[k] = h
        up = c.with_parameters(theta + step).scores_normalized(X)
        down = c.with_parameters(theta - step).scores_normalized(X)
        fd[:, k] = (up - down) / (2 * h)
    assert np.allclose(J, fd, rtol=1e-5, atol=1e-8)


def test_parameter_vector_roundtrip(neuron):
    c = init_network("DNN-S", FeatureMap.for_model(neuron))
    assert len(c.parameters()) == c.n_parameters
    same = c.with_parameters(c.parameters())
    X = np.zeros((1, 2))
    assert same.scores_normalized(X) == pytest.approx(c.scores_normalized(X))


def test_lm_separates_two_clusters():
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.uniform(-1, -0.5, 20), rng.uniform(0.5, 1, 20)])[:, None]
    y = np.array([0] * 20 + [1] * 20)
    c, curve = fit_lm(init_network("SNN", FEATURE_1D, rng_seed=2), X, y, TrainConfig(max_epochs=200))
    assert np.all((c.scores_normalized(X) >= 0.5) == (y == 1))
    assert all(b <= a for a, b in zip(curve, curve[1:]))


def test_lm_learns_xor():
    feature = FeatureMap(("x", "y"), ("a",), (), (), (-1.0, -1.0), (1.0, 1.0))
    X = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    solved = 0
    for seed in range(10):
        c, _ = fit_lm(init_network("SNN", feature, rng_seed=seed), X, y, TrainConfig(max_epochs=300))
        solved += bool(np.all((c.scores_normalized(X) >= 0.5) == (y == 1)))
    assert solved >= 9


def test_lm_rejects_bad_labels():
    c = init_network("SNN", FEATURE_1D)
    with pytest.raises(TrainingError):
        fit_lm(c, np.zeros((2, 1)), np.array([0, 2]))
    with pytest.raises(TrainingError):
        fit_lm(c, np.zeros((0, 1)), np.array([]))


def test_train_lm_uses_sample_set():
    c = init_network("SNN", FeatureMap.for_model(LINE), rng_seed=2)
    trained, curve = train_lm(c, _step_set(), TrainConfig(max_epochs=50))
    assert curve and curve[-1] <= curve[0]
    assert trained.sizes == c.sizes
    with pytest.raises(TrainingError):
        train_lm(c, _line_set([], []))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(mu_inc=0.5)
    with pytest.raises(ValueError):
        TrainConfig(max_epochs=-1)


def test_adapt_gd_raises_score_of_positive():
    c = init_network("SNN", FEATURE_1D, rng_seed=4)
    s = LINE.make_state("a", [0.5])
    before = forward(c, s)
    after = forward(adapt_gd(c, [(s, 1)], 0.01), s)
    assert after > before
    assert adapt_gd(c, [(s, 1)], 0.0) is c
    with pytest.raises(ValueError):
        adapt_gd(c, [(s, 1)], -1.0)


def test_bdt_splits_at_midpoint():
    tree = bdt_train(_step_set(), FeatureMap.for_model(LINE))
    assert tree.depth == 1
    # 0.95 와 1.05 의 정규화 좌표 중간
    assert tree.threshold[0] == pytest.approx(0.0, abs=1e-12)
    assert not bdt_classify(tree, LINE.make_state("a", [0.99]))
    assert bdt_classify(tree, LINE.make_state("a", [1.01]))


def test_bdt_pure_set_is_a_leaf():
    xs = np.linspace(0.1, 1.9, 12)
    tree = bdt_train(_line_set(xs, [1] * 12), FeatureMap.for_model(LINE))
    assert tree.n_nodes == 1
    assert bdt_classify(tree, LINE.make_state("a", [0.0]))


def test_nbor_tie_goes_to_first_reference():
    feature = FeatureMap.for_model(LINE)
    query = LINE.make_state("a", [1.0])
    assert nbor_classify(nbor_train(_line_set([0.5, 1.5], [1, 0]), feature), query)
    assert not nbor_classify(nbor_train(_line_set([1.5, 0.5], [0, 1]), feature), query)


def test_nbor_empty_reference():
    with pytest.raises(TrainingError):
        nbor_train(_line_set([], []), FEATURE_1D)


@pytest.mark.parametrize("kind", ["SNN", "BDT", "NBOR"])
def test_train_classifier_kinds(kind, tmp_path):
    train = _step_set()
    c, curve = train_classifier(kind, LINE, train, TrainConfig(max_epochs=100))
    assert (len(curve) > 0) == (kind == "SNN")
    assert classify(c, LINE.make_state("a", [1.95]))
    assert not classify(c, LINE.make_state("a", [0.05]))

    path = str(tmp_path / "c.json")
    save_classifier(c, path, {"model_id": "line"})
    back = load_classifier(path, LINE)
    states = train.states()
    assert np.array_equal(back.scores(states), c.scores(states))


def test_load_classifier_checks_model(neuron, tmp_path):
    c, _ = train_classifier("BDT", LINE, _step_set())
    path = str(tmp_path / "c.json")
    save_classifier(c, path)
    with pytest.raises(ClassifierFormatError):
        load_classifier(path, neuron)


def test_classifier_format_errors(tmp_path):
    c = init_network("SNN", FEATURE_1D)
    data = classifier_to_dict(c)
    with pytest.raises(ClassifierFormatError):
        classifier_from_dict({**data, "kind": "svm"})
    broken = dict(data)
    del broken["weights"]
    with pytest.raises(ClassifierFormatError):
        classifier_from_dict(broken)
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ClassifierFormatError):
        load_classifier(str(bad))
