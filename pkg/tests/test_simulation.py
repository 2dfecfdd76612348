# -*- coding: utf-8 -*-
import numpy as np
import pytest

from ha_core import in_unsafe, model_from_dict, reverse
from simulation import (
    DETERMINISTIC,
    RANDOM_WALK,
    BackwardSampleBudgetError,
    IntegratorConfig,
    InvalidStateError,
    Label,
    NondeterminismError,
    OracleConfig,
    OracleStats,
    ReversalError,
    TrajectoryStatus,
    backward_sample,
    reach_oracle,
    reverse_roundtrip_check,
    simulate,
)


def _model(modes, transitions=(), unsafe="x >= 100", domain=(0, 2), T=5.0, deterministic=True):
    return model_from_dict({
        "id": "toy",
        "variables": ["x"],
        "modes": [{"id": m, **spec} for m, spec in modes.items()],
        "transitions": list(transitions),
        "unsafe": unsafe,
        "domain": {"x": list(domain)},
        "T": T,
        "deterministic": deterministic,
    })


def _clock(**kw):
    """x' = 1, x >= 1 이면 x := 0"""
    return _model({"up": {"flow": {"x": "1"}}},
                  [{"from": "up", "to": "up", "guard": "x >= 1", "resets": {"x": {"kind": "constant", "args": [0]}}}],
                  domain=(0, 1), **kw)


def test_clock_jumps_at_guard_times():
    ha = _clock()
    traj = simulate(ha, ha.make_state("up", [0.0]), 3.5)
    assert traj.status == TrajectoryStatus.COMPLETED
    assert traj.jump_times == pytest.approx([0.0, 1.0, 2.0, 3.0], abs=1e-6)
    assert traj.final_state.x[0] == pytest.approx(0.5, abs=1e-6)
    assert all(j.pre[0] == pytest.approx(1.0, abs=1e-6) and j.post == (0.0,) for j in traj.jumps)


def test_jump_budget():
    ha = _clock()
    traj = simulate(ha, ha.make_state("up", [0.0]), 3.5, cfg=IntegratorConfig(max_jumps=2))
    assert traj.status == TrajectoryStatus.JUMP_BUDGET_EXHAUSTED
    assert len(traj.jumps) == 2
    assert traj.status_time == pytest.approx(3.0, abs=1e-6)


def test_hit_unsafe_stops():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2")
    traj = simulate(ha, ha.make_state("a", [0.0]), 5.0)
    assert traj.status == TrajectoryStatus.HIT_UNSAFE
    assert traj.status_time == pytest.approx(2.0, abs=1e-6)
    assert in_unsafe(ha, traj.final_state)


def test_unsafe_can_be_ignored():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2")
    traj = simulate(ha, ha.make_state("a", [0.0]), 5.0, stop_on_unsafe=False)
    assert traj.status == TrajectoryStatus.COMPLETED
    assert traj.final_state.x[0] == pytest.approx(5.0)


def test_unsafe_beats_guard_at_same_instant():
    ha = _model({"a": {"flow": {"x": "1"}}, "b": {"flow": {"x": "0"}}},
                [{"from": "a", "to": "b", "guard": "x >= 1"}], unsafe="x >= 1")
    traj = simulate(ha, ha.make_state("a", [0.0]), 5.0)
    assert traj.status == TrajectoryStatus.HIT_UNSAFE
    assert not traj.jumps


def test_invariant_violation_blocks():
    ha = _model({"a": {"flow": {"x": "1"}, "invariant": "x <= 1"}})
    traj = simulate(ha, ha.make_state("a", [0.0]), 5.0)
    assert traj.status == TrajectoryStatus.BLOCKED
    assert traj.status_time == pytest.approx(1.0, abs=1e-6)


def test_guard_fires_before_invariant_blocks():
    ha = _model({"a": {"flow": {"x": "1"}, "invariant": "x <= 1"}, "b": {"flow": {"x": "0"}}},
                [{"from": "a", "to": "b", "guard": "x >= 1"}])
    traj = simulate(ha, ha.make_state("a", [0.0]), 5.0)
    assert traj.status == TrajectoryStatus.COMPLETED
    assert [j.target for j in traj.jumps] == ["b"]
    assert traj.final_state.mode == "b"


def test_equality_guard_is_found_by_crossing():
    ha = _model({"a": {"flow": {"x": "1"}}, "b": {"flow": {"x": "0"}}},
                [{"from": "a", "to": "b", "guard": "x == 1"}])
    traj = simulate(ha, ha.make_state("a", [0.0]), 5.0)
    assert traj.jumps[0].time == pytest.approx(1.0, abs=1e-6)
    assert traj.final_state.x[0] == pytest.approx(1.0, abs=1e-6)


def test_initial_state_must_satisfy_invariant():
    ha = _model({"a": {"flow": {"x": "1"}, "invariant": "x <= 1"}})
    with pytest.raises(InvalidStateError):
        simulate(ha, ha.make_state("a", [1.5]), 1.0)


def test_dimension_mismatch_is_rejected():
    ha = _clock()
    with pytest.raises(InvalidStateError):
        simulate(ha, ha.make_state("up", [0.0, 1.0]), 1.0)


def _fork(**kw):
    return _model({"a": {"flow": {"x": "1"}}, "b": {"flow": {"x": "1"}}, "c": {"flow": {"x": "0"}}},
                  [{"from": "a", "to": "b", "guard": "x >= 1"}, {"from": "a", "to": "c", "guard": "x >= 1"}],
                  unsafe="x >= 3", **kw)


def test_deterministic_policy_rejects_simultaneous_guards():
    ha = _fork()
    with pytest.raises(NondeterminismError):
        simulate(ha, ha.make_state("a", [0.0]), 5.0, DETERMINISTIC)


def test_random_walk_is_reproducible():
    ha = _fork(deterministic=False)
    s = ha.make_state("a", [0.0])
    first = [simulate(ha, s, 5.0, RANDOM_WALK, rng_seed=k).final_state.mode for k in range(10)]
    second = [simulate(ha, s, 5.0, RANDOM_WALK, rng_seed=k).final_state.mode for k in range(10)]
    assert first == second


def test_record_times():
    ha = _clock()
    traj = simulate(ha, ha.make_state("up", [0.25]), 1.5, record_times=[0.0, 0.5, 1.0])
    assert [s.x[0] for s in traj.recorded] == pytest.approx([0.25, 0.75, 0.25], abs=1e-6)


def test_to_frame(neuron):
    traj = simulate(neuron, neuron.make_state("spiking", [-60.0, 5.0]), 5.0)
    df = traj.to_frame(neuron.variables)
    assert list(df.columns) == ["t", "mode", "v", "u"]
    assert df["t"].is_monotonic_increasing


def test_neuron_spikes_reset_to_c(neuron):
    traj = simulate(neuron, neuron.make_state("spiking", [-60.0, 5.0]), 20.0, stop_on_unsafe=False)
    assert traj.jumps
    for j in traj.jumps:
        assert j.pre[0] == pytest.approx(30.0, abs=1e-3)
        assert j.post[0] == -65.0


def test_oracle_on_deterministic_model():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2", T=1.0)
    stats = OracleStats()
    assert reach_oracle(ha, ha.make_state("a", [1.5]), stats=stats) == Label.POSITIVE
    assert reach_oracle(ha, ha.make_state("a", [0.0]), stats=stats) == Label.NEGATIVE
    assert (stats.calls, stats.positives) == (2, 1)


def test_oracle_rejects_unsafe_input():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2", T=1.0)
    with pytest.raises(InvalidStateError):
        reach_oracle(ha, ha.make_state("a", [2.5]))


def test_oracle_counts_blocked_runs_as_negative():
    ha = _model({"a": {"flow": {"x": "1"}, "invariant": "x <= 1"}}, unsafe="x >= 2", T=5.0)
    stats = OracleStats()
    assert reach_oracle(ha, ha.make_state("a", [0.0]), stats=stats) == Label.NEGATIVE
    assert stats.blocked == 1


def test_nondeterministic_oracle_finds_unsafe_branch():
    ha = _fork(deterministic=False)
    s = ha.make_state("a", [0.0])
    assert reach_oracle(ha, s, n_rollouts=50, rng_seed=1) == Label.POSITIVE


def test_backward_sample_lands_on_positive_state():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2", T=1.0)
    rev = reverse(ha)
    for seed in range(5):
        s = backward_sample(rev, ha.make_state("a", [2.5]), rng_seed=seed)
        assert 1.5 <= s.x[0] < 2.0
        assert reach_oracle(ha, s) == Label.POSITIVE


def test_backward_sample_budget():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2", T=1.0)
    with pytest.raises(BackwardSampleBudgetError):
        backward_sample(reverse(ha), ha.make_state("a", [10.0]), retries=5, rng_seed=0)


def test_backward_sample_requires_unsafe_start():
    ha = _model({"a": {"flow": {"x": "1"}}}, unsafe="x >= 2", T=1.0)
    with pytest.raises(InvalidStateError):
        backward_sample(reverse(ha), ha.make_state("a", [0.5]))


def test_roundtrip_through_constant_reset():
    ha = _clock(T=3.5)
    assert reverse_roundtrip_check(ha, ha.make_state("up", [0.25])) < 1e-6


def test_roundtrip_requires_deterministic_model():
    ha = _fork(deterministic=False)
    with pytest.raises(ReversalError):
        reverse_roundtrip_check(ha, ha.make_state("a", [0.0]))


def test_roundtrip_zero_horizon(neuron):
    assert reverse_roundtrip_check(neuron, neuron.make_state("spiking", [-60.0, 5.0]), T=0.0) == 0.0


@pytest.mark.slow
def test_neuron_roundtrip(neuron):
    rng = np.random.default_rng(2024)
    rev = reverse(neuron)
    spiking = 0
    for _ in range(100):
        s = neuron.make_state("spiking", [rng.uniform(-68.0, 29.0), rng.uniform(0.0, 25.0)])
        assert reverse_roundtrip_check(neuron, s, rev_ha=rev) < 1e-4
        spiking += 1
    assert spiking == 100


@pytest.mark.slow
def test_quadcopter_roundtrip(quadcopter):
    rng = np.random.default_rng(11)
    rev = reverse(quadcopter)
    for _ in range(50):
        box = quadcopter.domain("mode1")
        s = quadcopter.make_state("mode1", [rng.uniform(lo, hi) for lo, hi in box])
        assert reverse_roundtrip_check(quadcopter, s, rev_ha=rev) < 1e-4


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_jumps=-1)
    assert IntegratorConfig().step_limit(20.0) == pytest.approx(0.2)


def test_oracle_config_roundtrip():
    cfg = OracleConfig(IntegratorConfig(rel_tol=1e-7), n_rollouts=10)
    assert OracleConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        OracleConfig(n_rollouts=0)
