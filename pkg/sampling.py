# -*- coding: utf-8 -*-
"""
샘플링 모듈
- 균등(uniform) / 균형(balanced) / 동역학 기반(dynamics-aware) 샘플 생성
- 파라미터를 상태처럼 함께 뽑는 파라메트릭 샘플링
- 데이터셋 CSV 저장/로드 (첫 줄 '# meta' JSON + 17자리 실수)
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from constants import (
    CSV_FLOAT_FORMAT,
    DEFAULT_REJECTION_BUDGET,
    DYNAMICS_GRID_POINTS,
    DYNAMICS_HORIZON_FACTOR,
    DYNAMICS_MIN_SEEDS,
    SAMPLING_STRATEGIES,
)
from ha_core import HybridAutomaton, State, in_invariant, in_unsafe, reverse
from rng import derive_seed, make_rng
from simulation import (
    RANDOM_WALK,
    TransitionPolicy,
    BackwardSampleBudgetError,
    Label,
    OracleConfig,
    OracleStats,
    SimulationError,
    backward_sample,
    simulate,
)

logger = logging.getLogger(__name__)

# 결정적 모델은 머무르기 없이 가드 시각에 바로 전이
_URGENT_WALK = TransitionPolicy("random_walk", allow_stay=False)


# ==============================================================================
# 예외
# ==============================================================================

class SamplingError(RuntimeError):
    """샘플링 오류의 기본 클래스"""


class RejectionBudgetError(SamplingError):
    pass


class EmptyPoolError(SamplingError):
    pass


class DatasetFormatError(ValueError):
    pass


# ==============================================================================
# 데이터 타입
# ==============================================================================

@dataclass(frozen=True)
class Sample:
    state: State
    label: Label
    strategy: str
    seed: int


@dataclass
class SampleSet:
    model_id: str
    variables: Tuple[str, ...]
    parameter_names: Tuple[str, ...]
    samples: List[Sample] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    @property
    def counts(self) -> Dict[str, int]:
        positives = sum(1 for s in self.samples if s.label == Label.POSITIVE)
        return {"positive": positives, "negative": len(self.samples) - positives}

    @property
    def columns(self) -> List[str]:
        return ["mode", *self.variables, *self.parameter_names, "label", "strategy", "seed"]

    def states(self) -> List[State]:
        return [s.state for s in self.samples]

    def labels(self) -> np.ndarray:
        return np.array([int(s.label) for s in self.samples], dtype=int)

    def subset(self, indices: Sequence[int]) -> "SampleSet":
        return SampleSet(self.model_id, self.variables, self.parameter_names,
                         [self.samples[i] for i in indices], dict(self.config))

    def check_model(self, ha: HybridAutomaton):
        """데이터셋 차원이 모델과 맞는지 확인"""
        if tuple(ha.variables) != tuple(self.variables) or tuple(ha.parameter_names) != tuple(self.parameter_names):
            raise DatasetFormatError(
                f"데이터셋 열 {self.variables}+{self.parameter_names} 이 모델 {ha.model_id} "
                f"({ha.variables}+{ha.parameter_names}) 과 맞지 않습니다")
        unknown = {s.state.mode for s in self.samples} - set(ha.mode_ids)
        if unknown:
            raise DatasetFormatError(f"모델에 없는 모드: {sorted(unknown)}")

    def to_frame(self) -> pd.DataFrame:
        n_x, n_p = len(self.variables), len(self.parameter_names)
        xs = np.array([s.state.x for s in self.samples], dtype=float).reshape(len(self.samples), n_x)
        ps = np.array([s.state.p for s in self.samples], dtype=float).reshape(len(self.samples), n_p)
        df = pd.DataFrame(np.hstack([xs, ps]), columns=[*self.variables, *self.parameter_names])
        df.insert(0, "mode", [s.state.mode for s in self.samples])
        df["label"] = [int(s.label) for s in self.samples]
        df["strategy"] = [s.strategy for s in self.samples]
        df["seed"] = np.array([s.seed for s in self.samples], dtype=np.int64)
        return df


# ==============================================================================
# 병렬 실행
# ==============================================================================

@dataclass(frozen=True)
class _Context:
    """작업자 프로세스로 한 번만 전달되는 샘플링 문맥"""
    ha: HybridAutomaton
    oracle: OracleConfig
    master_seed: int
    active_params: Tuple[str, ...] = ()
    rejection_budget: int = DEFAULT_REJECTION_BUDGET
    rev_ha: Optional[HybridAutomaton] = None
    horizon: float = 0.0
    record_times: Tuple[float, ...] = ()


_WORKER_CONTEXT: Optional[_Context] = None


def _init_worker(ctx: _Context):
    global _WORKER_CONTEXT
    _WORKER_CONTEXT = ctx


def _call_in_worker(job):
    fn, task = job
    return fn(_WORKER_CONTEXT, task)


def _map_tasks(ctx: _Context, fn, tasks: Sequence, jobs: int) -> list:
    """tasks 순서대로 fn(ctx, task) 결과를 모음 (jobs 와 무관하게 같은 결과)"""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(ctx, t) for t in tasks]
    chunk = max(1, len(tasks) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(ctx,)) as pool:
        return list(pool.map(_call_in_worker, [(fn, t) for t in tasks], chunksize=chunk))


# ==============================================================================
# 상태 추출 헬퍼
# ==============================================================================

def _uniform_in_box(box, rng) -> Tuple[float, ...]:
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    return tuple(float(v) for v in rng.uniform(lo, hi))


def _draw_params(ctx: _Context, seed: int) -> Tuple[float, ...]:
    """활성 파라미터는 선언 구간에서 균등, 나머지는 기본값"""
    if not ctx.active_params:
        return ctx.ha.default_parameters()
    rng = make_rng(seed, "params")
    return tuple(float(rng.uniform(p.lo, p.hi)) if p.name in ctx.active_params else p.default
                 for p in ctx.ha.parameters)


def _draw_safe_state(ctx: _Context, p, rng) -> State:
    """모드를 균등하게 고른 뒤, 그 모드의 도메인 ∩ 불변식 ∩ 위험영역 밖에서 x 를 거부 추출"""
    ha = ctx.ha
    modes = ha.mode_ids
    mode = modes[int(rng.integers(len(modes)))]
    box = ha.domain(mode)
    for _ in range(ctx.rejection_budget):
        s = State(mode, _uniform_in_box(box, rng), p)
        if in_invariant(ha, s) and not in_unsafe(ha, s):
            return s
    raise RejectionBudgetError(
        f"{ctx.rejection_budget}회 추출 동안 모드 {mode} 에서 안전 상태를 찾지 못함 (불변식이 너무 좁음)")


def _draw_unsafe_state(ctx: _Context, p, rng) -> State:
    """unsafe_box (없으면 도메인 외곽 박스) 안에서 위험 상태를 추출"""
    ha = ctx.ha
    box = ha.unsafe_box if ha.unsafe_box is not None else ha.domain_hull()
    modes = ha.mode_ids
    for _ in range(ctx.rejection_budget):
        mode = modes[int(rng.integers(len(modes)))]
        s = State(mode, _uniform_in_box(box, rng), p)
        if in_unsafe(ha, s) and in_invariant(ha, s):
            return s
    raise RejectionBudgetError(f"{ctx.rejection_budget}회 추출 동안 위험 상태를 찾지 못함")


def _draw_init_state(ctx: _Context, p, rng) -> State:
    ha = ctx.ha
    modes = sorted(ha.init_region)
    for _ in range(ctx.rejection_budget):
        mode = modes[int(rng.integers(len(modes)))]
        s = State(mode, _uniform_in_box(ha.init_region[mode], rng), p)
        if in_invariant(ha, s) and not in_unsafe(ha, s):
            return s
    raise RejectionBudgetError(f"{ctx.rejection_budget}회 추출 동안 초기 영역에서 유효한 상태를 찾지 못함")


# ==============================================================================
# 인덱스별 작업 (작업자 프로세스에서 실행)
# ==============================================================================

def _label(ctx: _Context, s: State, seed: int, stats: OracleStats) -> Label:
    return ctx.oracle.label(ctx.ha, s, derive_seed(seed, "oracle"), stats)


def _uniform_task(ctx: _Context, index: int):
    seed = derive_seed(ctx.master_seed, "uniform", index)
    stats = OracleStats()
    s = _draw_safe_state(ctx, _draw_params(ctx, seed), make_rng(seed))
    return Sample(s, _label(ctx, s, seed, stats), "uniform", seed), stats


def _negative_task(ctx: _Context, index: int):
    seed = derive_seed(ctx.master_seed, "balanced-negative", index)
    stats = OracleStats()
    rng = make_rng(seed)
    p = _draw_params(ctx, seed)
    for _ in range(ctx.rejection_budget):
        s = _draw_safe_state(ctx, p, rng)
        if _label(ctx, s, seed, stats) == Label.NEGATIVE:
            return Sample(s, Label.NEGATIVE, "balanced", seed), stats
    raise RejectionBudgetError(f"음성 샘플 {index}: {ctx.rejection_budget}회 동안 음성 상태 없음")


def _positive_task(ctx: _Context, index: int):
    seed = derive_seed(ctx.master_seed, "balanced-positive", index)
    stats = OracleStats()
    rng = make_rng(seed)
    p = _draw_params(ctx, seed)
    cfg = ctx.oracle.integrator
    for _ in range(ctx.rejection_budget):
        u = _draw_unsafe_state(ctx, p, rng)
        try:
            s = backward_sample(ctx.rev_ha, u, ctx.ha.time_bound, cfg, rng, ctx.oracle.backward_retries)
        except BackwardSampleBudgetError:
            stats.failures += 1
            continue
        if _label(ctx, s, seed, stats) == Label.POSITIVE:
            return Sample(s, Label.POSITIVE, "balanced", seed), stats
        stats.unverified += 1
    raise RejectionBudgetError(f"양성 샘플 {index}: {ctx.rejection_budget}회 동안 검증된 역방향 샘플 없음")


def _dynamics_seed_task(ctx: _Context, index: int):
    """초기 영역 한 점에서 랜덤워크 후 격자 시각 상태들을 풀에 넣음"""
    seed = derive_seed(ctx.master_seed, "dynamics-seed", index)
    rng = make_rng(seed)
    stats = OracleStats()
    s0 = _draw_init_state(ctx, _draw_params(ctx, seed), rng)
    try:
        policy = _URGENT_WALK if ctx.ha.deterministic else RANDOM_WALK
        traj = simulate(ctx.ha, s0, ctx.horizon, policy, ctx.oracle.integrator, rng,
                        record_times=ctx.record_times)
    except SimulationError as e:
        logger.debug("동역학 시드 %d 시뮬레이션 실패: %s", index, e)
        stats.failures += 1
        return [], stats
    stats.record(traj)
    return [s for s in traj.recorded if not in_unsafe(ctx.ha, s)], stats


def _pool_label_task(ctx: _Context, task):
    index, s = task
    seed = derive_seed(ctx.master_seed, "dynamics", index)
    stats = OracleStats()
    return Sample(s, _label(ctx, s, seed, stats), "dynamics", seed), stats


# ==============================================================================
# 데이터셋 생성기
# ==============================================================================

class DatasetGenerator:
    """모델 하나에 대한 라벨링된 샘플 집합 생성기"""

    def __init__(self, ha: HybridAutomaton, oracle: Optional[OracleConfig] = None, seed: int = 0,
                 jobs: int = 1, active_params: Sequence[str] = (),
                 rejection_budget: int = DEFAULT_REJECTION_BUDGET):
        """
        Args:
            ha: 하이브리드 오토마톤
            oracle: 도달성 오라클 설정
            seed: 마스터 시드 (샘플별 시드는 여기서 파생)
            jobs: 작업자 프로세스 수
            active_params: 샘플마다 새로 뽑을 파라미터 이름
            rejection_budget: 샘플 하나당 최대 재추출 횟수
        """
        unknown = set(active_params) - set(ha.parameter_names)
        if unknown:
            raise SamplingError(f"모델 {ha.model_id} 에 없는 파라미터: {sorted(unknown)}")
        if rejection_budget < 1:
            raise ValueError(f"rejection_budget 는 1 이상이어야 합니다: {rejection_budget}")
        self.ha = ha
        self.oracle = oracle or OracleConfig()
        self.seed = int(seed)
        self.jobs = max(1, int(jobs))
        # 모델에 선언된 순서로 고정
        self.active_params = tuple(p for p in ha.parameter_names if p in set(active_params))
        self.rejection_budget = rejection_budget
        self.stats = OracleStats()

    def _context(self, **extra) -> _Context:
        return _Context(self.ha, self.oracle, self.seed, self.active_params, self.rejection_budget, **extra)

    def _collect(self, results, where) -> List[Sample]:
        samples = []
        for sample, stats in results:
            samples.append(sample)
            self.stats.merge(stats)
        self.stats.log_summary(where)
        return samples

    def _result(self, samples, strategy, n, **extra) -> SampleSet:
        config = {
            "strategy": strategy,
            "n": n,
            "seed": self.seed,
            "oracle": self.oracle.to_dict(),
            "active_params": list(self.active_params),
            "jump_bound": self.ha.jump_bound,
            **extra,
        }
        ds = SampleSet(self.ha.model_id, tuple(self.ha.variables), tuple(self.ha.parameter_names), samples, config)
        logger.info("%s 샘플 %d개 생성 (양성 %d / 음성 %d)", strategy, len(ds),
                    ds.counts["positive"], ds.counts["negative"])
        return ds

    # --- 전략 ---

    def uniform(self, n: int) -> SampleSet:
        if n < 1:
            raise ValueError(f"n 은 1 이상이어야 합니다: {n}")
        results = _map_tasks(self._context(), _uniform_task, range(n), self.jobs)
        return self._result(self._collect(results, "uniform 샘플링"), "uniform", n)

    def balanced(self, n: int) -> SampleSet:
        if n < 2 or n % 2:
            raise ValueError(f"balanced 샘플 수는 2 이상의 짝수여야 합니다: {n}")
        half = n // 2
        negatives = _map_tasks(self._context(), _negative_task, range(half), self.jobs)
        ctx = self._context(rev_ha=reverse(self.ha))
        positives = _map_tasks(ctx, _positive_task, range(half), self.jobs)
        samples = self._collect(negatives + positives, "balanced 샘플링")
        return self._result(samples, "balanced", n)

    def dynamics_aware(self, n: int, T_prime: Optional[float] = None, n_seeds: Optional[int] = None,
                       grid_points: int = DYNAMICS_GRID_POINTS) -> SampleSet:
        ha = self.ha
        if not ha.init_region:
            raise SamplingError(f"모델 {ha.model_id} 에 초기 영역(init)이 없습니다")
        if n < 1:
            raise ValueError(f"n 은 1 이상이어야 합니다: {n}")
        T_prime = DYNAMICS_HORIZON_FACTOR * ha.time_bound if T_prime is None else float(T_prime)
        if not T_prime > ha.time_bound:
            raise ValueError(f"T' ({T_prime}) 는 T ({ha.time_bound}) 보다 커야 합니다")
        if grid_points < 1:
            raise ValueError(f"grid_points 는 1 이상이어야 합니다: {grid_points}")
        m0 = max(DYNAMICS_MIN_SEEDS, n // 10) if n_seeds is None else int(n_seeds)

        delta = T_prime / grid_points
        grid = tuple(float(k * delta) for k in range(grid_points + 1))
        ctx = self._context(horizon=T_prime, record_times=grid)
        pool: List[State] = []
        for states, stats in _map_tasks(ctx, _dynamics_seed_task, range(m0), self.jobs):
            pool.extend(states)
            self.stats.merge(stats)
        if not pool:
            raise EmptyPoolError(f"{m0}개 시드 궤적에서 위험영역 밖 상태를 하나도 얻지 못함")
        logger.info("동역학 풀: 시드 %d개, 상태 %d개 (Δ=%.4g)", m0, len(pool), delta)

        picks = make_rng(self.seed, "dynamics-draw").integers(len(pool), size=n)
        tasks = [(i, pool[int(k)]) for i, k in enumerate(picks)]
        results = _map_tasks(ctx, _pool_label_task, tasks, self.jobs)
        samples = self._collect(results, "dynamics 샘플링")
        return self._result(samples, "dynamics", n, T_prime=T_prime, n_seeds=m0, pool_size=len(pool),
                            grid_delta=delta)

    def run(self, strategy: str, n: int, **kwargs) -> SampleSet:
        if strategy not in SAMPLING_STRATEGIES:
            raise ValueError(f"알 수 없는 샘플링 전략: {strategy} (가능: {SAMPLING_STRATEGIES})")
        if strategy == "uniform":
            return self.uniform(n)
        if strategy == "balanced":
            return self.balanced(n)
        return self.dynamics_aware(n, **kwargs)


# ==============================================================================
# 함수형 진입점
# ==============================================================================

def uniform_sample(ha: HybridAutomaton, n: int, rng_seed: int = 0, oracle: Optional[OracleConfig] = None,
                   jobs: int = 1, rejection_budget: int = DEFAULT_REJECTION_BUDGET) -> SampleSet:
    return DatasetGenerator(ha, oracle, rng_seed, jobs, rejection_budget=rejection_budget).uniform(n)


def balanced_sample(ha: HybridAutomaton, n: int, rng_seed: int = 0, oracle: Optional[OracleConfig] = None,
                    jobs: int = 1, rejection_budget: int = DEFAULT_REJECTION_BUDGET) -> SampleSet:
    return DatasetGenerator(ha, oracle, rng_seed, jobs, rejection_budget=rejection_budget).balanced(n)


def dynamics_aware_sample(ha: HybridAutomaton, n: int, T_prime: Optional[float] = None, rng_seed: int = 0,
                          oracle: Optional[OracleConfig] = None, jobs: int = 1,
                          n_seeds: Optional[int] = None, grid_points: int = DYNAMICS_GRID_POINTS) -> SampleSet:
    gen = DatasetGenerator(ha, oracle, rng_seed, jobs)
    return gen.dynamics_aware(n, T_prime, n_seeds, grid_points)


def parametric_sample(ha: HybridAutomaton, n: int, active_params: Sequence[str], rng_seed: int = 0,
                      strategy: str = "uniform", oracle: Optional[OracleConfig] = None,
                      jobs: int = 1, **kwargs) -> SampleSet:
    """
    활성 파라미터를 샘플마다 선언 구간(기본 ±50%)에서 균등하게 뽑아
    상태와 함께 라벨링합니다. 활성 파라미터가 없으면 기본 전략과 같은 결과입니다.
    """
    gen = DatasetGenerator(ha, oracle, rng_seed, jobs, active_params=active_params)
    return gen.run(strategy, n, **kwargs)


# ==============================================================================
# CSV 저장 / 로드
# ==============================================================================

META_PREFIX = "# meta "


def save_dataset(ds: SampleSet, path: str, meta: Optional[dict] = None):
    """
    데이터셋을 CSV 로 저장합니다. 첫 줄은 '# meta {json}' 입니다.

    Args:
        meta: 추가로 기록할 메타데이터 (config_hash, seed 등)
    """
    header = {
        "model_id": ds.model_id,
        "variables": list(ds.variables),
        "parameters": list(ds.parameter_names),
        "counts": ds.counts,
        "config": ds.config,
        **(meta or {}),
    }
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(META_PREFIX + json.dumps(header, sort_keys=True) + "\n")
        ds.to_frame().to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info("데이터셋 저장: %s (%d개)", path, len(ds))


def read_meta(path: str) -> dict:
    """CSV 첫 줄의 메타데이터만 읽음"""
    try:
        with open(path, encoding="utf-8") as f:
            first = f.readline()
    except OSError as e:
        raise DatasetFormatError(f"데이터셋 파일을 열 수 없습니다: {path} ({e})") from e
    if not first.startswith(META_PREFIX):
        raise DatasetFormatError(f"{path}: 첫 줄이 '{META_PREFIX.strip()}' 로 시작하지 않습니다")
    try:
        meta = json.loads(first[len(META_PREFIX):])
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{path}: 메타데이터 JSON 오류 ({e})") from e
    for key in ("model_id", "variables", "parameters"):
        if key not in meta:
            raise DatasetFormatError(f"{path}: 메타데이터에 '{key}' 가 없습니다")
    return meta


def load_dataset(path: str, ha: Optional[HybridAutomaton] = None) -> SampleSet:
    """
    save_dataset 으로 저장한 CSV 를 읽습니다. ha 를 주면 차원을 함께 검사합니다.

    Raises:
        DatasetFormatError: 메타데이터/헤더/값 오류, 모델과 차원 불일치
    """
    meta = read_meta(path)
    variables = tuple(meta["variables"])
    params = tuple(meta["parameters"])
    expected = ["mode", *variables, *params, "label", "strategy", "seed"]
    try:
        df = pd.read_csv(path, skiprows=1, dtype={"mode": str, "strategy": str},
                         float_precision="round_trip", keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise DatasetFormatError(f"{path}: CSV 파싱 실패 ({e})") from e
    if list(df.columns) != expected:
        raise DatasetFormatError(f"{path}: 헤더 {list(df.columns)} != {expected}")

    try:
        xs = df[list(variables)].to_numpy(dtype=float)
        ps = df[list(params)].to_numpy(dtype=float) if params else np.zeros((len(df), 0))
        labels = df["label"].to_numpy(dtype=int)
        seeds = df["seed"].to_numpy(dtype=np.int64)
    except (ValueError, TypeError) as e:
        raise DatasetFormatError(f"{path}: 숫자가 아닌 값 ({e})") from e
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
        raise DatasetFormatError(f"{path}: 유한하지 않은 상태값")
    if not np.all((labels == 0) | (labels == 1)):
        raise DatasetFormatError(f"{path}: 라벨은 0 또는 1 이어야 합니다")

    modes = df["mode"].tolist()
    strategies = df["strategy"].tolist()
    samples = [
        Sample(State(modes[i], tuple(xs[i].tolist()), tuple(ps[i].tolist())),
               Label(int(labels[i])), strategies[i], int(seeds[i]))
        for i in range(len(df))
    ]
    ds = SampleSet(meta["model_id"], variables, params, samples, meta.get("config", {}))
    if ha is not None:
        ds.check_model(ha)
    return ds


def concat_datasets(sets: Sequence[SampleSet]) -> SampleSet:
    """같은 모델의 데이터셋들을 순서대로 이어 붙임 (예: balanced 10K + dynamics 10K)"""
    if not sets:
        raise ValueError("이어 붙일 데이터셋이 없습니다")
    first = sets[0]
    for ds in sets[1:]:
        if (ds.model_id, ds.variables, ds.parameter_names) != (first.model_id, first.variables, first.parameter_names):
            raise DatasetFormatError(f"모델이 다른 데이터셋은 합칠 수 없습니다: {first.model_id} / {ds.model_id}")
    samples = [s for ds in sets for s in ds.samples]
    config = {"strategy": "+".join(ds.config.get("strategy", "?") for ds in sets),
              "parts": [ds.config for ds in sets]}
    return SampleSet(first.model_id, first.variables, first.parameter_names, samples, config)
