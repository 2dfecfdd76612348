# -*- coding: utf-8 -*-
import numpy as np
import pytest

from classifiers import FeatureMap, init_network
from falsification import (
    AdaptationTrace,
    FalsificationEngine,
    FalsificationResult,
    GaConfig,
    adaptation_loop,
    ga_falsify,
    objective,
)
from ha_core import in_unsafe, model_from_dict
from simulation import Label, reach_oracle

# x' = 1, x >= 2 위험, T = 1 -> x in [1, 2) 이 양성
RAMP = model_from_dict({
    "id": "ramp",
    "variables": ["x"],
    "modes": [{"id": "a", "flow": {"x": "1"}}],
    "unsafe": "x >= 2",
    "domain": {"x": [0, 2]},
    "T": 1,
})

SMALL_GA = GaConfig(population=20, generations=6, seed=3)


class Constant:
    """모든 상태에 같은 점수"""
    kind = "constant"
    theta = 0.5

    def __init__(self, value):
        self.value = value
        self.feature = FeatureMap.for_model(RAMP)

    def scores(self, states):
        return np.full(len(states), float(self.value))


def test_objective():
    assert objective(0.0, 1) == pytest.approx(0.125)
    assert objective(0.5, 1) == pytest.approx(0.5)
    assert objective(0.75, 0) == pytest.approx(1 / (8 * 0.75 ** 2))
    assert objective(1.0, 1) == 1e12
    assert objective(1.0 - 1e-9, 1, cap=100.0) == 100.0


@pytest.mark.parametrize("kwargs", [
    {"population": 1},
    {"generations": 0},
    {"tournament": 0},
    {"crossover_rate": 1.5},
    {"elitism": 200},
    {"fitness_cap": 0.0},
])
def test_ga_config_validation(kwargs):
    with pytest.raises(ValueError):
        GaConfig(**kwargs)


def test_always_negative_classifier_has_false_negatives():
    engine = FalsificationEngine(RAMP, ga=SMALL_GA)
    result = engine.run(Constant(0.0))
    assert result.fn_states
    for s in result.fn_states:
        assert 1.0 <= s.x[0] < 2.0
        assert reach_oracle(RAMP, s) == Label.POSITIVE
    assert result.best_fitness == [pytest.approx(0.125)] * SMALL_GA.generations
    assert result.evaluations == 20 * 6
    assert result.fp_found == 0


def test_always_positive_classifier_has_no_false_negatives():
    result = FalsificationEngine(RAMP, ga=SMALL_GA).run(Constant(1.0))
    assert result.fn_states == []
    assert result.fp_found > 0


def test_best_fitness_never_increases():
    c = init_network("SNN", FeatureMap.for_model(RAMP), rng_seed=7)
    result = FalsificationEngine(RAMP, ga=SMALL_GA).run(c)
    history = result.best_fitness
    assert all(b <= a for a, b in zip(history, history[1:]))


def test_run_is_deterministic():
    c = init_network("SNN", FeatureMap.for_model(RAMP), rng_seed=7)
    a = FalsificationEngine(RAMP, ga=SMALL_GA).run(c)
    b = FalsificationEngine(RAMP, ga=SMALL_GA).run(c)
    assert a.fn_states == b.fn_states
    assert a.best_fitness == b.best_fitness


def test_oracle_results_are_memoized():
    engine = FalsificationEngine(RAMP, ga=SMALL_GA)
    engine.run(Constant(0.0))
    calls = engine.stats.calls
    assert calls > 0
    engine.run(Constant(0.0))
    assert engine.stats.calls == calls


def test_truth_skips_unsafe_states():
    engine = FalsificationEngine(RAMP)
    assert engine.truth(RAMP.make_state("a", [2.0])) is None
    assert engine.truth(RAMP.make_state("a", [1.5])) == 1
    assert engine.truth(RAMP.make_state("a", [0.5])) == 0


def test_ga_falsify_returns_states():
    states = ga_falsify(Constant(0.0), RAMP, ga=SMALL_GA)
    assert states and all(not in_unsafe(RAMP, s) for s in states)


def test_adaptation_requires_network():
    with pytest.raises(ValueError):
        adaptation_loop(Constant(0.0), RAMP)


def test_adaptation_loop_records_trace():
    c = init_network("SNN", FeatureMap.for_model(RAMP), rng_seed=1)
    adapted, trace, found = adaptation_loop(c, RAMP, ga=SMALL_GA, lr=0.05, max_iters=3, adapt_epochs=20)
    assert 1 <= trace.iterations <= 3
    frame = trace.to_frame()
    assert list(frame["iteration"]) == list(range(1, trace.iterations + 1))
    assert frame["fn_found"].sum() == len(found)
    last = trace.rows[-1]
    assert trace.converged == (last["fn_found"] + last["fn_repeated"] == 0)
    assert len({(s.state.mode, s.state.x) for s in found}) == len(found)
    assert all(s.label == Label.POSITIVE for s in found)
    assert adapted.sizes == c.sizes


def test_empty_trace_frame():
    frame = AdaptationTrace().to_frame()
    assert frame.empty
    assert "assumption_violations" in frame.columns


def test_adaptation_keeps_each_false_negative_once(monkeypatch):
    fixed = [RAMP.make_state("a", [1.25]), RAMP.make_state("a", [1.5])]

    def same_states(self, classifier, theta=None, seed=None):
        return FalsificationResult(list(fixed), 0, [0.125], 2)

    monkeypatch.setattr(FalsificationEngine, "run", same_states)
    c = init_network("SNN", FeatureMap.for_model(RAMP), rng_seed=1)
    _, trace, found = adaptation_loop(c, RAMP, ga=SMALL_GA, lr=0.0, max_iters=3, adapt_epochs=1)
    assert [s.state for s in found] == fixed
    frame = trace.to_frame()
    assert frame["fn_found"].tolist() == [2, 0, 0]
    assert frame["fn_repeated"].tolist() == [0, 2, 2]
    assert frame["train_size"].tolist() == [2, 2, 2]
    assert not trace.converged
