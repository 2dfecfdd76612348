# -*- coding: utf-8 -*-
"""
팔시피케이션 모듈
- 유전 알고리즘(GA)으로 분류기의 거짓 음성(FN) 상태 탐색
- 찾은 FN 으로 분류기를 점진 적응시키는 반복 루프
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from classifiers import MlpClassifier, adapt_gd
from constants import (
    ADAPT_MAX_ITERS,
    DEDUP_RESOLUTION,
    DEFAULT_ADAPT_EPOCHS,
    FITNESS_CAP,
    GA_CROSSOVER_RATE,
    GA_ELITISM,
    GA_GENERATIONS,
    GA_MUTATION_RATE,
    GA_MUTATION_SIGMA,
    GA_POPULATION,
    GA_TOURNAMENT,
)
from evaluation import evaluate
from ha_core import HybridAutomaton, State, in_invariant, in_unsafe
from rng import derive_seed
from sampling import Sample
from simulation import Label, OracleConfig, OracleStats, SimulationError

logger = logging.getLogger(__name__)


# ==============================================================================
# 설정
# ==============================================================================

@dataclass(frozen=True)
class GaConfig:
    population: int = GA_POPULATION
    generations: int = GA_GENERATIONS
    tournament: int = GA_TOURNAMENT
    crossover_rate: float = GA_CROSSOVER_RATE
    mutation_rate: float = GA_MUTATION_RATE
    mutation_sigma: float = GA_MUTATION_SIGMA     # 축별 도메인 폭 대비
    elitism: int = GA_ELITISM
    seed: int = 0
    fitness_cap: float = FITNESS_CAP
    dedup_resolution: float = DEDUP_RESOLUTION

    def __post_init__(self):
        if self.population < 2:
            raise ValueError(f"population 은 2 이상이어야 합니다: {self.population}")
        if self.generations < 1:
            raise ValueError(f"generations 는 1 이상이어야 합니다: {self.generations}")
        if self.tournament < 1:
            raise ValueError(f"tournament 는 1 이상이어야 합니다: {self.tournament}")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} 는 [0, 1] 이어야 합니다: {getattr(self, name)}")
        if not 0 <= self.elitism <= self.population:
            raise ValueError(f"elitism 은 0 ~ population 이어야 합니다: {self.elitism}")
        if self.mutation_sigma < 0 or self.fitness_cap <= 0 or self.dedup_resolution <= 0:
            raise ValueError("mutation_sigma ≥ 0, fitness_cap > 0, dedup_resolution > 0 이어야 합니다")

    def to_dict(self) -> dict:
        return asdict(self)


def objective(F: float, b: int, cap: float = FITNESS_CAP) -> float:
    """o(s) = 1 / (8 (F(s) - b(s))²), F == b 이면 cap"""
    gap = float(F) - float(b)
    if gap == 0.0:
        return cap
    return min(cap, 1.0 / (8.0 * gap * gap))


# ==============================================================================
# GA
# ==============================================================================

@dataclass
class FalsificationResult:
    fn_states: List[State]
    fp_found: int
    best_fitness: List[float]           # 세대별 최솟값
    evaluations: int
    stats: OracleStats = field(default_factory=OracleStats)


class FalsificationEngine:
    """
    유전자: (모드, 연속 변수, 분류기가 입력으로 쓰는 활성 파라미터)
    적합도 o(s) 를 최소화하며, 세대를 거치며 만난 FN 후보를 모두 모읍니다.
    오라클 결과는 양자화된 상태 키로 메모해 두고 반복 사이에도 재사용합니다.
    """

    def __init__(self, ha: HybridAutomaton, oracle: Optional[OracleConfig] = None,
                 ga: Optional[GaConfig] = None, active_params: Tuple[str, ...] = ()):
        self.ha = ha
        self.oracle = oracle or OracleConfig()
        self.ga = ga or GaConfig()
        self.active_params = tuple(p for p in ha.parameter_names if p in set(active_params))
        self.memo: Dict[tuple, Optional[int]] = {}
        self.stats = OracleStats()

        specs = {p.name: p for p in ha.parameters}
        self._param_index = [ha.parameter_names.index(p) for p in self.active_params]
        self._param_lo = np.array([specs[p].lo for p in self.active_params], dtype=float)
        self._param_hi = np.array([specs[p].hi for p in self.active_params], dtype=float)
        self._modes = ha.mode_ids

    # --- 유전자 ↔ 상태 ---

    def _bounds(self, mode_index: int) -> Tuple[np.ndarray, np.ndarray]:
        box = self.ha.domain(self._modes[mode_index])
        lo = np.concatenate([[b[0] for b in box], self._param_lo])
        hi = np.concatenate([[b[1] for b in box], self._param_hi])
        return lo, hi

    def _state(self, mode_index: int, genes: np.ndarray) -> State:
        n = len(self.ha.variables)
        p = list(self.ha.default_parameters())
        for j, k in enumerate(self._param_index):
            p[k] = float(genes[n + j])
        return State(self._modes[mode_index], tuple(float(v) for v in genes[:n]), tuple(p))

    def _key(self, s: State) -> tuple:
        res = self.ga.dedup_resolution
        return (s.mode,) + tuple(int(round(v / res)) for v in s.x + s.p)

    # --- 오라클 ---

    def truth(self, s: State) -> Optional[int]:
        """b(s), 평가 불가(위험영역/불변식 위반/시뮬레이션 실패)면 None"""
        key = self._key(s)
        if key in self.memo:
            return self.memo[key]
        value = None
        if in_invariant(self.ha, s) and not in_unsafe(self.ha, s):
            try:
                seed = derive_seed(self.ga.seed, "oracle", repr(key))
                value = int(self.oracle.label(self.ha, s, seed, self.stats))
            except SimulationError as e:
                logger.debug("오라클 실패 %s: %s", s, e)
                self.stats.failures += 1
        self.memo[key] = value
        return value

    # --- 유전 연산 ---

    def _random_individual(self, rng) -> Tuple[int, np.ndarray]:
        m = int(rng.integers(len(self._modes)))
        lo, hi = self._bounds(m)
        return m, rng.uniform(lo, hi)

    def _tournament(self, fitness: np.ndarray, rng) -> int:
        contestants = rng.integers(0, len(fitness), size=self.ga.tournament)
        best = int(contestants[0])
        for c in contestants[1:]:
            if fitness[int(c)] < fitness[best]:
                best = int(c)
        return best

    def _crossover(self, a, b, rng):
        (ma, ga), (mb, gb) = a, b
        if rng.random() >= self.ga.crossover_rate:
            return (ma, ga.copy()), (mb, gb.copy())
        lam = rng.random(ga.shape)
        return (ma, lam * ga + (1.0 - lam) * gb), (mb, (1.0 - lam) * ga + lam * gb)

    def _mutate(self, ind, rng):
        m, genes = ind
        if len(self._modes) > 1 and rng.random() < self.ga.mutation_rate:
            m = int(rng.integers(len(self._modes)))
        lo, hi = self._bounds(m)
        mask = rng.random(genes.shape) < self.ga.mutation_rate
        if mask.any():
            genes = genes + rng.normal(0.0, self.ga.mutation_sigma * (hi - lo)) * mask
        return m, np.clip(genes, lo, hi)

    # --- 실행 ---

    def run(self, classifier, theta: Optional[float] = None, seed: Optional[int] = None) -> FalsificationResult:
        """
        분류기에 대한 FN 후보 집합을 찾습니다.

        Returns:
            FalsificationResult (fn_states: b(s) = 1 이고 F(s) < θ 인 상태, 발견 순서, 중복 제거)
        """
        theta = classifier.theta if theta is None else theta
        ga = self.ga
        rng = np.random.default_rng(ga.seed if seed is None else seed)
        calls_before = self.stats.calls
        population = [self._random_individual(rng) for _ in range(ga.population)]

        fn_states: Dict[tuple, State] = {}
        fp_keys = set()
        best_history: List[float] = []
        for generation in range(ga.generations):
            states = [self._state(m, g) for m, g in population]
            F = classifier.scores(states)
            fitness = np.empty(len(states))
            for i, s in enumerate(states):
                b = self.truth(s)
                if b is None:
                    fitness[i] = ga.fitness_cap
                    continue
                fitness[i] = objective(F[i], b, ga.fitness_cap)
                if b == 1 and F[i] < theta:
                    fn_states.setdefault(self._key(s), s)
                elif b == 0 and F[i] >= theta:
                    fp_keys.add(self._key(s))
            best_history.append(float(fitness.min()))
            if generation == ga.generations - 1:
                break

            order = np.argsort(fitness, kind="stable")
            next_pop = [(population[i][0], population[i][1].copy()) for i in order[:ga.elitism]]
            while len(next_pop) < ga.population:
                a = population[self._tournament(fitness, rng)]
                b = population[self._tournament(fitness, rng)]
                for child in self._crossover(a, b, rng):
                    if len(next_pop) < ga.population:
                        next_pop.append(self._mutate(child, rng))
            population = next_pop

        if fp_keys:
            logger.info("GA: FP 후보 %d개 발견 (재학습에는 사용하지 않음)", len(fp_keys))
        logger.info("GA: FN 후보 %d개, 최저 적합도 %.4g, 신규 오라클 호출 %d회",
                    len(fn_states), best_history[-1], self.stats.calls - calls_before)
        return FalsificationResult(list(fn_states.values()), len(fp_keys), best_history,
                                   ga.population * ga.generations, self.stats)


def ga_falsify(classifier, ha: HybridAutomaton, oracle: Optional[OracleConfig] = None,
               theta: Optional[float] = None, ga: Optional[GaConfig] = None) -> List[State]:
    """GA 로 찾은 FN 후보 상태 목록"""
    engine = FalsificationEngine(ha, oracle, ga, classifier.feature.active_params)
    result = engine.run(classifier, theta)
    engine.stats.log_summary("팔시피케이션")
    return result.fn_states


# ==============================================================================
# 적응 루프
# ==============================================================================

@dataclass
class AdaptationTrace:
    rows: List[dict] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        columns = ["iteration", "fn_found", "fn_repeated", "accuracy", "fn_rate", "fp_rate", "train_size",
                   "assumption_violations"]
        return pd.DataFrame(self.rows, columns=columns)


def adaptation_loop(classifier: MlpClassifier, ha: HybridAutomaton, oracle: Optional[OracleConfig] = None,
                    ga: Optional[GaConfig] = None, lr: float = 0.003, max_iters: int = ADAPT_MAX_ITERS,
                    adapt_epochs: int = DEFAULT_ADAPT_EPOCHS, test=None, train=None):
    """
    GA 로 FN 을 찾고, 지금까지 찾은 FN 전부(라벨 1)로 경사하강 적응을 반복합니다.
    GA 가 FN 을 찾지 못하면 수렴으로 보고 멈춥니다.

    Args:
        test: 반복마다 정확도/FN/FP 를 기록할 테스트 집합 (선택)
        train: 적응 후 음성으로 바뀐 양성 학습 샘플 수를 셀 원래 학습 집합 (선택)

    Returns:
        (적응된 분류기, AdaptationTrace, 찾은 FN 샘플 목록)
    """
    if not isinstance(classifier, MlpClassifier):
        raise ValueError(f"적응은 신경망 분류기에서만 가능합니다: {classifier.kind}")
    if max_iters < 1 or adapt_epochs < 1:
        raise ValueError("max_iters, adapt_epochs 는 1 이상이어야 합니다")
    ga = ga or GaConfig()
    engine = FalsificationEngine(ha, oracle, ga, classifier.feature.active_params)
    theta = classifier.theta
    base_size = len(train) if train is not None else 0
    train_positives = [s.state for s in train if s.label == Label.POSITIVE] if train is not None else []

    current = classifier
    found: List[Sample] = []
    seen = set()
    trace = AdaptationTrace()
    for k in range(1, max_iters + 1):
        result = engine.run(current, theta, seed=derive_seed(ga.seed, "iteration", k))
        # 이전 반복에서 이미 찾은 상태 (모드, x, 파라미터) 는 다시 넣지 않음
        new = []
        for s in result.fn_states:
            key = (s.mode, s.x, s.p)
            if key not in seen:
                seen.add(key)
                new.append(Sample(s, Label.POSITIVE, "falsification", k))
        repeated = len(result.fn_states) - len(new)
        found.extend(new)
        if result.fn_states:
            for _ in range(adapt_epochs):
                current = adapt_gd(current, found, lr)
                if np.all(current.scores([s.state for s in found]) >= theta):
                    break

        row = {"iteration": k, "fn_found": len(new), "fn_repeated": repeated, "train_size": base_size + len(found),
               "accuracy": np.nan, "fn_rate": np.nan, "fp_rate": np.nan, "assumption_violations": 0}
        if test is not None:
            r = evaluate(current, test, theta)
            row.update(accuracy=r.accuracy, fn_rate=r.fn_rate, fp_rate=r.fp_rate)
        if train_positives:
            row["assumption_violations"] = int(np.sum(current.scores(train_positives) < theta))
        trace.rows.append(row)
        logger.info("적응 %d회차: 새 FN %d개, 재발견 %d개, 누적 %d개", k, len(new), repeated, len(found))

        if not result.fn_states:
            trace.converged = True
            break

    engine.stats.log_summary("적응 루프")
    if not trace.converged:
        logger.warning("적응 루프가 %d회 안에 수렴하지 않았습니다", max_iters)
    return current, trace, found
