# -*- coding: utf-8 -*-
"""
시뮬레이션 모듈
- RK45(Dormand-Prince) 적분 + 스텝 내부 이벤트 탐지 (가드 / 위험영역 / 불변식 위반)
- 전방 도달성 오라클 (결정적: 1회, 비결정적: 랜덤워크 n회)
- 역방향 오토마톤을 이용한 양성(positive) 샘플 생성
- 전방 → 역방향 왕복 일관성 검사
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum, IntEnum
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import RK45

from constants import (
    DEFAULT_ABS_TOL,
    DEFAULT_BACKWARD_RETRIES,
    DEFAULT_EVENT_PROBES,
    DEFAULT_EVENT_TOL,
    DEFAULT_N_ROLLOUTS,
    DEFAULT_REL_TOL,
    DEFAULT_REPLAY_TOL,
    MAX_STEP_DIVISOR,
)
from expr_lang import Compare, ExprError, eval_expr, print_expr
from ha_core import (
    HybridAutomaton,
    ModelError,
    State,
    apply_reset,
    in_domain,
    in_unsafe,
    reverse,
)

logger = logging.getLogger(__name__)


# ==============================================================================
# 예외
# ==============================================================================

class SimulationError(RuntimeError):
    """시뮬레이션 오류의 기본 클래스"""


class NonFiniteDerivativeError(SimulationError):
    pass


class StepSizeUnderflowError(SimulationError):
    pass


class InvalidStateError(SimulationError):
    pass


class NondeterminismError(SimulationError):
    pass


class BackwardSampleBudgetError(SimulationError):
    pass


class ReversalError(SimulationError):
    pass


# ==============================================================================
# 설정 / 결과 타입
# ==============================================================================

class Label(IntEnum):
    NEGATIVE = 0
    POSITIVE = 1


class TrajectoryStatus(str, Enum):
    COMPLETED = "completed"
    HIT_UNSAFE = "hit_unsafe"
    BLOCKED = "blocked"
    JUMP_BUDGET_EXHAUSTED = "jump_budget_exhausted"


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_step: Optional[float] = None     # None → T / 100
    event_tol: float = DEFAULT_EVENT_TOL
    max_jumps: Optional[int] = None      # None → 모델의 jump_bound
    event_probes: int = DEFAULT_EVENT_PROBES

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} 는 양수여야 합니다: {getattr(self, name)}")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError(f"max_step 는 양수여야 합니다: {self.max_step}")
        if self.max_jumps is not None and self.max_jumps < 0:
            raise ValueError(f"max_jumps 는 0 이상이어야 합니다: {self.max_jumps}")
        if self.event_probes < 0:
            raise ValueError(f"event_probes 는 0 이상이어야 합니다: {self.event_probes}")

    def step_limit(self, T: float) -> float:
        if self.max_step is not None:
            return self.max_step
        return T / MAX_STEP_DIVISOR if T > 0 else np.inf

    def jump_limit(self, ha: HybridAutomaton) -> int:
        return ha.jump_bound if self.max_jumps is None else self.max_jumps

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TransitionPolicy:
    """
    deterministic: 가장 이른 가드 시각에 즉시 전이, 후보가 둘 이상이면 오류
    random_walk: 활성 전이 중 균등 선택 (allow_stay 이면 머무르기도 후보)
    """
    kind: str = "deterministic"
    allow_stay: bool = False

    def __post_init__(self):
        if self.kind not in ("deterministic", "random_walk"):
            raise ValueError(f"알 수 없는 전이 정책: {self.kind}")


DETERMINISTIC = TransitionPolicy()
RANDOM_WALK = TransitionPolicy("random_walk", allow_stay=True)


@dataclass
class Segment:
    mode: str
    times: np.ndarray
    states: np.ndarray       # (점 개수, 변수 개수)


@dataclass(frozen=True)
class Jump:
    time: float
    transition: int
    source: str
    target: str
    pre: tuple
    post: tuple


@dataclass
class Trajectory:
    segments: List[Segment]
    jumps: List[Jump]
    status: TrajectoryStatus
    status_time: float
    params: tuple = ()
    recorded: List[State] = field(default_factory=list)

    @property
    def jump_times(self) -> List[float]:
        """ξ₀ = 0 다음 서로 다른 점프 시각"""
        times = [0.0]
        for j in self.jumps:
            if j.time > times[-1]:
                times.append(j.time)
        return times

    @property
    def final_state(self) -> State:
        seg = self.segments[-1]
        return State(seg.mode, tuple(float(v) for v in seg.states[-1]), self.params)

    def to_frame(self, variables: Sequence[str]) -> pd.DataFrame:
        """궤적 덤프 (t, mode, 변수들)"""
        frames = []
        for seg in self.segments:
            df = pd.DataFrame(seg.states, columns=list(variables))
            df.insert(0, "mode", seg.mode)
            df.insert(0, "t", seg.times)
            frames.append(df)
        return pd.concat(frames, ignore_index=True)


@dataclass
class OracleStats:
    """배치 단위 경고 카운터"""
    calls: int = 0
    positives: int = 0
    blocked: int = 0
    jump_budget_exhausted: int = 0
    failures: int = 0
    unverified: int = 0      # 전방 재검증에서 음성이 나온 역방향 샘플

    def record(self, traj: Trajectory):
        if traj.status == TrajectoryStatus.BLOCKED:
            self.blocked += 1
        elif traj.status == TrajectoryStatus.JUMP_BUDGET_EXHAUSTED:
            self.jump_budget_exhausted += 1

    def merge(self, other: "OracleStats") -> "OracleStats":
        for name in ("calls", "positives", "blocked", "jump_budget_exhausted", "failures", "unverified"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def log_summary(self, where: str):
        if self.blocked or self.jump_budget_exhausted or self.failures or self.unverified:
            logger.warning("%s: 오라클 %d회 중 blocked %d, 점프 한도 초과 %d, 실패 %d, 재검증 탈락 %d",
                           where, self.calls, self.blocked, self.jump_budget_exhausted,
                           self.failures, self.unverified)
        else:
            logger.info("%s: 오라클 %d회 (양성 %d)", where, self.calls, self.positives)


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(0 if seed is None else seed)


# ==============================================================================
# 이벤트 탐지 헬퍼
# ==============================================================================

def _bisect(is_past, lo, hi, tol):
    """is_past(lo) 거짓, is_past(hi) 참인 구간을 tol 까지 좁힘"""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if is_past(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


class _StepWindow:
    """한 스텝 [t0, t1] 의 dense output 위 탐색 지점"""

    def __init__(self, dense, t0, y0, t1, y1, probes, params):
        self.dense = dense
        self.params = params
        inner = [t0 + (t1 - t0) * k / (probes + 1) for k in range(1, probes + 1)]
        self.times = [t0] + inner + [t1]
        ys = [y0] + (list(dense(np.array(inner)).T) if inner else []) + [y1]
        self.vecs = [y.tolist() + params for y in ys]

    def vec_at(self, t):
        return self.dense(t).tolist() + self.params

    def first_true(self, holds, tol):
        """처음으로 holds 가 참이 되는 (t_lo, t_hi), 없으면 None"""
        for j in range(1, len(self.times)):
            if holds(self.vecs[j]):
                return _bisect(lambda t: holds(self.vec_at(t)), self.times[j - 1], self.times[j], tol)
        return None

    def first_crossing(self, pred, tol):
        """등식 가드: 교차 함수 부호 변화 + 나머지 조건"""
        g_prev = pred.crossing(self.vecs[0])
        for j in range(1, len(self.times)):
            g = pred.crossing(self.vecs[j])
            if g_prev != 0.0 and (g == 0.0 or (g > 0.0) != (g_prev > 0.0)):
                side = g_prev > 0.0

                def is_past(t, side=side):
                    value = pred.crossing(self.vec_at(t))
                    return value == 0.0 or (value > 0.0) != side

                lo, hi = _bisect(is_past, self.times[j - 1], self.times[j], tol)
                if pred.condition_holds(self.vec_at(hi)):
                    return lo, hi
            g_prev = g
        return None


def _predicate_event(window, pred, tol):
    if pred.crossing is not None:
        return window.first_crossing(pred, tol)
    return window.first_true(pred.holds, tol)


# ==============================================================================
# 시뮬레이터
# ==============================================================================

def _flow_function(ha, mode, params):
    """RK45 용 f(t, y); 정의역 오류와 NaN/inf 는 NonFiniteDerivativeError"""
    flow = ha.compiled.flows[mode]

    def fun(t, y):
        try:
            d = np.asarray(flow(y.tolist() + params), dtype=float)
        except (ExprError, ArithmeticError, ValueError) as e:
            raise NonFiniteDerivativeError(f"t={t:.6g}, 모드 {mode}: {e}") from e
        if not np.all(np.isfinite(d)):
            raise NonFiniteDerivativeError(f"t={t:.6g}, 모드 {mode}: 유한하지 않은 미분값 {d}")
        return d

    return fun


class _Run:
    """simulate() 한 번의 실행 상태"""

    def __init__(self, ha, s0, T, policy, cfg, rng, stop_on_unsafe, record_times):
        self.ha = ha
        self.comp = ha.compiled
        self.T = float(T)
        self.policy = policy
        self.cfg = cfg
        self.rng = rng
        self.stop_on_unsafe = stop_on_unsafe
        self.params = list(s0.p)
        self.max_step = cfg.step_limit(self.T)
        self.max_jumps = cfg.jump_limit(ha)
        self.segments: List[Segment] = []
        self.jumps: List[Jump] = []
        self.record_times = np.sort(np.asarray(record_times, dtype=float)) if record_times is not None else None
        self.record_index = 0
        self.recorded: List[State] = []
        # 현재 세그먼트
        self.mode = s0.mode
        self.seg_t: List[float] = []
        self.seg_y: List[np.ndarray] = []

    # --- 기록 ---

    def _push(self, t, y):
        self.seg_t.append(float(t))
        self.seg_y.append(np.array(y, dtype=float))

    def _close_segment(self):
        self.segments.append(Segment(self.mode, np.array(self.seg_t), np.vstack(self.seg_y)))
        self.seg_t, self.seg_y = [], []

    def _record_until(self, t_end, value_at):
        if self.record_times is None:
            return
        times = self.record_times
        while self.record_index < len(times) and times[self.record_index] <= t_end:
            y = value_at(times[self.record_index])
            self.recorded.append(State(self.mode, tuple(float(v) for v in y), tuple(self.params)))
            self.record_index += 1

    def _finish(self, status, t):
        self._close_segment()
        return Trajectory(self.segments, self.jumps, status, float(t), tuple(self.params), self.recorded)

    # --- 전이 선택 ---

    def _choose(self, candidates, y, allow_stay):
        """후보 전이 중 하나 선택, 머무르면 None"""
        if self.policy.kind == "deterministic":
            if len(candidates) > 1:
                names = [f"{self.ha.transitions[i].source}->{self.ha.transitions[i].target}" for i in candidates]
                raise NondeterminismError(f"결정적 정책인데 동시에 활성화된 전이가 여러 개: {names}")
            return candidates[0]
        options = list(candidates)
        if allow_stay and self.policy.allow_stay and self.comp.invariants[self.mode].holds(y.tolist() + self.params):
            options.append(None)
        return options[int(self.rng.integers(len(options)))]

    def _jump(self, index, t, y):
        """점프 수행; 한도 초과면 False"""
        if len(self.jumps) >= self.max_jumps:
            return False
        pre = State(self.mode, tuple(float(v) for v in y), tuple(self.params))
        try:
            post = apply_reset(self.ha, index, pre, self.rng)
        except ModelError as e:
            raise ReversalError(str(e)) from e
        except ExprError as e:
            raise NonFiniteDerivativeError(f"리셋 평가 실패: {e}") from e
        t_rec = self.ha.transitions[index]
        self.jumps.append(Jump(float(t), index, t_rec.source, t_rec.target, pre.x, post.x))
        self._close_segment()
        self.mode = post.mode
        self._push(t, post.x)
        return True

    # --- 메인 루프 ---

    def run(self, s0: State) -> Trajectory:
        t = 0.0
        y = np.array(s0.x, dtype=float)
        self._push(t, y)
        if self.T == 0.0:
            self._record_until(0.0, lambda _t: y)
            return self._finish(TrajectoryStatus.COMPLETED, 0.0)

        first, disarmed = True, frozenset()
        while True:
            outcome = self._segment(t, y, first, disarmed)
            first = False
            if isinstance(outcome, Trajectory):
                return outcome
            t, y, disarmed = outcome

    def _segment(self, t, y, first, disarmed):
        """
        한 모드 구간을 적분합니다.

        Returns:
            종료 시 Trajectory, 점프/머무르기 후 재시작이 필요하면 (t, y, 비활성 가드 집합)
        """
        comp = self.comp
        tol = self.cfg.event_tol
        vec = y.tolist() + self.params
        outgoing = comp.outgoing[self.mode]
        guards = comp.guards
        invariant = comp.invariants[self.mode]

        if self.stop_on_unsafe and comp.unsafe.holds(vec):
            self._record_until(t, lambda _t: y)
            return self._finish(TrajectoryStatus.HIT_UNSAFE, t)

        # 구간 시작 시점에 이미 참인 가드
        armed = {i: i not in disarmed for i in outgoing}
        enabled = [i for i in outgoing if armed[i] and guards[i].holds(vec)]
        if enabled:
            choice = self._choose(enabled, y, allow_stay=True)
            if choice is not None:
                self._record_until(t, lambda _t: y)
                if not self._jump(choice, t, y):
                    return self._finish(TrajectoryStatus.JUMP_BUDGET_EXHAUSTED, t)
                return t, np.array(self.seg_y[-1]), frozenset()
            for i in enabled:
                armed[i] = False
        if not invariant.holds(vec):
            if first and not self.jumps:
                raise InvalidStateError(f"초기 상태가 모드 {self.mode} 의 불변식을 만족하지 않습니다")
            return self._finish(TrajectoryStatus.BLOCKED, t)

        if t >= self.T:
            self._record_until(t, lambda _t: y)
            return self._finish(TrajectoryStatus.COMPLETED, t)

        stepper = RK45(_flow_function(self.ha, self.mode, self.params), t, y, self.T, max_step=self.max_step,
                       rtol=self.cfg.rel_tol, atol=self.cfg.abs_tol)
        while True:
            t0, y0 = stepper.t, stepper.y.copy()
            stepper.step()
            if stepper.status == "failed":
                raise StepSizeUnderflowError(f"t={t0:.6g}, 모드 {self.mode}: 스텝 크기 미달")
            t1, y1 = stepper.t, stepper.y.copy()
            dense = stepper.dense_output()
            window = _StepWindow(dense, t0, y0, t1, y1, self.cfg.event_probes, self.params)

            # (시각, 우선순위, 종류, 인덱스, 구간)
            events = []
            if self.stop_on_unsafe:
                hit = _predicate_event(window, comp.unsafe, tol)
                if hit:
                    events.append((hit[1], 0, "unsafe", None, hit))
            for i in outgoing:
                if armed[i]:
                    hit = _predicate_event(window, guards[i], tol)
                    if hit:
                        events.append((hit[1], 1, "guard", i, hit))
            if not invariant.trivial:
                hit = window.first_true(lambda v: not invariant.holds(v), tol)
                if hit:
                    events.append((hit[1], 2, "invariant", None, hit))

            if not events:
                self._record_until(t1, dense)
                self._push(t1, y1)
                vec1 = window.vecs[-1]
                for i in outgoing:
                    if not armed[i] and not guards[i].holds(vec1):
                        armed[i] = True
                if stepper.status == "finished":
                    return self._finish(TrajectoryStatus.COMPLETED, t1)
                continue

            t_first = min(e[0] for e in events)
            group = sorted((e for e in events if e[0] <= t_first + tol), key=lambda e: e[1])
            kind = group[0][2]
            t_e = group[0][0]

            if kind == "unsafe":
                y_e = dense(t_e)
                self._record_until(t_e, dense)
                self._push(t_e, y_e)
                return self._finish(TrajectoryStatus.HIT_UNSAFE, t_e)

            if kind == "guard":
                y_e = dense(t_e)
                self._record_until(t_e, dense)
                self._push(t_e, y_e)
                candidates = [e[3] for e in group if e[2] == "guard"]
                choice = self._choose(candidates, y_e, allow_stay=True)
                if choice is None:
                    # 머무르기: 해당 가드는 거짓이 될 때까지 비활성
                    still_off = {i for i in outgoing if not armed[i]}
                    return t_e, y_e, frozenset(still_off | set(candidates))
                if not self._jump(choice, t_e, y_e):
                    return self._finish(TrajectoryStatus.JUMP_BUDGET_EXHAUSTED, t_e)
                return t_e, np.array(self.seg_y[-1]), frozenset()

            # 불변식 위반: 그 시점에 참인 가드로 강제 전이, 없으면 blocked
            t_lo, t_hi = group[0][4]
            y_hi = dense(t_hi)
            vec_hi = y_hi.tolist() + self.params
            forced = [i for i in outgoing if guards[i].holds_near(vec_hi, tol * 1e3)]
            if forced:
                self._record_until(t_hi, dense)
                self._push(t_hi, y_hi)
                choice = self._choose(forced, y_hi, allow_stay=False)
                if not self._jump(choice, t_hi, y_hi):
                    return self._finish(TrajectoryStatus.JUMP_BUDGET_EXHAUSTED, t_hi)
                return t_hi, np.array(self.seg_y[-1]), frozenset()
            y_lo = dense(t_lo)
            self._record_until(t_lo, dense)
            self._push(t_lo, y_lo)
            return self._finish(TrajectoryStatus.BLOCKED, t_lo)


def simulate(ha: HybridAutomaton, s0: State, T: float, policy: TransitionPolicy = DETERMINISTIC,
             cfg: Optional[IntegratorConfig] = None, rng_seed=None, *,
             stop_on_unsafe: bool = True, record_times=None) -> Trajectory:
    """
    하이브리드 오토마톤 궤적을 시뮬레이션합니다.

    Args:
        ha: 오토마톤
        s0: 초기 상태 (모드 불변식 만족)
        T: 시간 한도 (초)
        policy: 전이 선택 정책
        cfg: 적분기 설정
        rng_seed: 정수 시드 또는 numpy Generator (랜덤워크/구간 리셋용)
        stop_on_unsafe: 위험영역 진입 시 종료 여부
        record_times: 상태를 기록할 시각 목록 (dynamics-aware 샘플링)

    Returns:
        Trajectory (status: completed / hit_unsafe / blocked / jump_budget_exhausted)
    """
    cfg = cfg or IntegratorConfig()
    problem = ha.state_error(s0)
    if problem:
        raise InvalidStateError(problem)
    if T < 0:
        raise InvalidStateError(f"T 는 0 이상이어야 합니다: {T}")
    run = _Run(ha, s0, T, policy, cfg, as_rng(rng_seed), stop_on_unsafe, record_times)
    return run.run(s0)


# ==============================================================================
# 도달성 오라클
# ==============================================================================

def reach_oracle(ha: HybridAutomaton, s: State, cfg: Optional[IntegratorConfig] = None,
                 n_rollouts: int = DEFAULT_N_ROLLOUTS, rng_seed=None,
                 stats: Optional[OracleStats] = None) -> Label:
    """
    시간 한도 T 안에 위험영역 도달 가능 여부로 상태를 라벨링합니다.

    결정적 모델은 시뮬레이션 1회, 비결정적 모델은 랜덤워크 n_rollouts 회 중
    하나라도 위험영역에 닿으면 양성입니다 (Reach 의 하한 근사).
    blocked / 점프 한도 초과 궤적은 음성으로 보고 stats 에 집계합니다.
    """
    cfg = cfg or IntegratorConfig()
    if in_unsafe(ha, s):
        raise InvalidStateError("오라클 입력 상태가 이미 위험영역에 있습니다")
    stats = stats if stats is not None else OracleStats()
    stats.calls += 1

    label = Label.NEGATIVE
    if ha.deterministic:
        traj = simulate(ha, s, ha.time_bound, DETERMINISTIC, cfg, rng_seed)
        stats.record(traj)
        if traj.status == TrajectoryStatus.HIT_UNSAFE:
            label = Label.POSITIVE
    else:
        rng = as_rng(rng_seed)
        for _ in range(n_rollouts):
            traj = simulate(ha, s, ha.time_bound, RANDOM_WALK, cfg, rng)
            stats.record(traj)
            if traj.status == TrajectoryStatus.HIT_UNSAFE:
                label = Label.POSITIVE
                break
    if label == Label.POSITIVE:
        stats.positives += 1
    return label


# ==============================================================================
# 역방향 샘플링
# ==============================================================================

def backward_sample(rev_ha: HybridAutomaton, u: State, T: Optional[float] = None,
                    cfg: Optional[IntegratorConfig] = None, rng_seed=None,
                    retries: int = DEFAULT_BACKWARD_RETRIES) -> State:
    """
    위험 상태 u 에서 역방향 오토마톤을 τ ~ U(0, T] 동안 랜덤워크로 시뮬레이션하여
    위험영역 밖 + 샘플링 도메인 안의 끝점을 반환합니다.

    Raises:
        BackwardSampleBudgetError: retries 번 모두 실패
    """
    cfg = cfg or IntegratorConfig()
    T = rev_ha.time_bound if T is None else float(T)
    problem = rev_ha.state_error(u)
    if problem:
        raise InvalidStateError(problem)
    if not in_unsafe(rev_ha, u):
        raise InvalidStateError("역방향 시작 상태가 위험영역 안에 있어야 합니다")

    rng = as_rng(rng_seed)
    last_error = None
    for _ in range(retries):
        tau = T * (1.0 - rng.random())
        try:
            traj = simulate(rev_ha, u, tau, RANDOM_WALK, cfg, rng, stop_on_unsafe=False)
        except SimulationError as e:
            last_error = e
            continue
        if traj.status != TrajectoryStatus.COMPLETED:
            continue
        s = traj.final_state
        if in_unsafe(rev_ha, s) or not in_domain(rev_ha, s):
            continue
        return s
    detail = f" (마지막 오류: {last_error})" if last_error else ""
    raise BackwardSampleBudgetError(f"역방향 샘플 {retries}회 시도 모두 도메인을 벗어남{detail}")


# ==============================================================================
# 왕복 검사
# ==============================================================================

def _integrate_flow(ha, state, t_a, t_b, cfg, max_step):
    """이벤트 탐지 없이 현재 모드 흐름만 적분"""
    if t_b <= t_a:
        return state
    stepper = RK45(_flow_function(ha, state.mode, list(state.p)), t_a, np.array(state.x, dtype=float),
                   t_b, max_step=max_step, rtol=cfg.rel_tol, atol=cfg.abs_tol)
    while stepper.status == "running":
        stepper.step()
        if stepper.status == "failed":
            raise StepSizeUnderflowError(f"t={stepper.t:.6g}, 모드 {state.mode}: 스텝 크기 미달")
    return state.with_x(stepper.y)


def _guard_residual(parts, env):
    """가드 conjunct 들의 최대 상대 위반량 (비교식이 아닌 조건이 거짓이면 inf)"""
    worst = 0.0
    for p in parts:
        if isinstance(p, Compare):
            lhs, rhs = eval_expr(p.left, env), eval_expr(p.right, env)
            if p.op == "==":
                r = abs(lhs - rhs)
            elif p.op in (">", ">="):
                r = max(0.0, rhs - lhs)
            elif p.op in ("<", "<="):
                r = max(0.0, lhs - rhs)
            else:
                r = 0.0
            worst = max(worst, r / (1.0 + abs(rhs)))
        elif eval_expr(p, env) == 0.0:
            return float("inf")
    return worst


def reverse_roundtrip_check(ha: HybridAutomaton, s: State, T: Optional[float] = None,
                            cfg: Optional[IntegratorConfig] = None,
                            rev_ha: Optional[HybridAutomaton] = None,
                            replay_tol: float = DEFAULT_REPLAY_TOL) -> float:
    """
    s 에서 T 만큼 전방 시뮬레이션한 뒤, 역방향 오토마톤으로 같은 전이열을
    시각 T - ξ 에 거꾸로 재생하여 s 로 돌아온 오차를 반환합니다.

    Returns:
        도메인 폭으로 정규화한 sup-norm 편차

    Raises:
        ReversalError: 전방 궤적 미완료, 또는 재생 시점에 역전이 가드가 성립하지 않음
    """
    cfg = cfg or IntegratorConfig()
    T = ha.time_bound if T is None else float(T)
    if T == 0.0:
        return 0.0
    if not ha.deterministic:
        raise ReversalError("왕복 검사는 결정적 모델에서만 정의됩니다")

    fwd = simulate(ha, s, T, DETERMINISTIC, cfg, stop_on_unsafe=False)
    if fwd.status != TrajectoryStatus.COMPLETED:
        raise ReversalError(f"전방 궤적이 T 까지 완료되지 않음: {fwd.status.value} (t={fwd.status_time:.6g})")

    rev = rev_ha if rev_ha is not None else reverse(ha)
    max_step = cfg.step_limit(T)
    names = rev.names
    state = fwd.final_state
    t = 0.0
    for jump in reversed(fwd.jumps):
        t_mirror = T - jump.time
        state = _integrate_flow(rev, state, t, t_mirror, cfg, max_step)
        t = max(t, t_mirror)
        if state.mode != jump.target:
            raise ReversalError(f"t={t:.6g}: 모드 불일치 {state.mode} != {jump.target}")
        env = dict(zip(names, rev.vector(state)))
        parts = rev.compiled.replay_guards[jump.transition]
        residual = _guard_residual(parts, env)
        if residual > replay_tol:
            guard_text = print_expr(rev.transitions[jump.transition].replay_guard)
            raise ReversalError(
                f"t={t:.6g}: 역전이 {jump.target}->{jump.source} 가드 '{guard_text}' 불일치 (잔차 {residual:.3g})")
        resets = rev.transitions[jump.transition].resets
        overrides = {i: jump.pre[i] for i, r in enumerate(resets) if r.kind == "interval"}
        state = apply_reset(rev, jump.transition, state, overrides=overrides)
    state = _integrate_flow(rev, state, t, T, cfg, max_step)

    if state.mode != s.mode:
        raise ReversalError(f"왕복 후 모드 불일치 {state.mode} != {s.mode}")
    deviation = 0.0
    for a, b, (lo, hi) in zip(state.x, s.x, ha.domain(s.mode)):
        width = hi - lo if hi > lo else 1.0
        deviation = max(deviation, abs(a - b) / width)
    logger.debug("왕복 편차 %.3g (점프 %d회)", deviation, len(fwd.jumps))
    return deviation


# ==============================================================================
# 오라클 설정 (샘플링 / 팔시피케이션 공용)
# ==============================================================================

@dataclass(frozen=True)
class OracleConfig:
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    n_rollouts: int = DEFAULT_N_ROLLOUTS
    backward_retries: int = DEFAULT_BACKWARD_RETRIES

    def __post_init__(self):
        if self.n_rollouts < 1:
            raise ValueError(f"n_rollouts 는 1 이상이어야 합니다: {self.n_rollouts}")
        if self.backward_retries < 1:
            raise ValueError(f"backward_retries 는 1 이상이어야 합니다: {self.backward_retries}")

    def label(self, ha: HybridAutomaton, s: State, rng_seed=None,
              stats: Optional[OracleStats] = None) -> Label:
        return reach_oracle(ha, s, self.integrator, self.n_rollouts, rng_seed, stats)

    def to_dict(self) -> dict:
        return {"integrator": self.integrator.to_dict(), "n_rollouts": self.n_rollouts,
                "backward_retries": self.backward_retries}

    @classmethod
    def from_dict(cls, data: dict) -> "OracleConfig":
        data = dict(data or {})
        integrator = IntegratorConfig(**data.pop("integrator", {}))
        return cls(integrator=integrator, **data)
