# -*- coding: utf-8 -*-
"""
평가 모듈
- 경험적 정확도 / FN 비율 / FP 비율과 Clopper-Pearson 신뢰구간
- SPRT 인증 (정확도 ≥ θ, FN/FP 비율 ≤ θ)
- 임계값 스윕, 아키텍처 스윕, 학습 크기 스윕, 분류기 벤치마크
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import beta as beta_dist

from constants import (
    DEFAULT_CONFIDENCE,
    DEFAULT_THETA,
    SPRT_ALPHA,
    SPRT_BETA,
    SPRT_DELTA,
    SPRT_MAX_SAMPLES,
    SPRT_THETA_ACC,
    SPRT_THETA_FN,
    SPRT_THETA_FP,
    THRESHOLD_GRID_POINTS,
)
from classifiers import TrainConfig, TrainingError, train_classifier
from rng import make_rng

logger = logging.getLogger(__name__)

METRICS = ("accuracy", "fn_rate", "fp_rate")
SPRT_KINDS = ("accuracy", "rate")


# ==============================================================================
# 신뢰구간
# ==============================================================================

def clopper_pearson(k: int, n: int, conf: float = DEFAULT_CONFIDENCE) -> Tuple[float, float]:
    """
    이항 비율 k/n 의 정확(exact) 신뢰구간 (정규화 불완전 베타 함수의 역함수)

    k = 0 이면 하한 0, k = n 이면 상한 1.
    """
    if not 0 <= k <= n:
        raise ValueError(f"0 ≤ k ≤ n 이어야 합니다: k={k}, n={n}")
    if not 0.0 < conf < 1.0:
        raise ValueError(f"신뢰수준은 (0, 1) 이어야 합니다: {conf}")
    if n == 0:
        return 0.0, 1.0
    tail = (1.0 - conf) / 2.0
    lo = 0.0 if k == 0 else float(beta_dist.ppf(tail, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1.0 - tail, k + 1, n - k))
    # 수치 오차로 점추정이 구간 밖에 놓이지 않게
    p = k / n
    return min(lo, p), max(hi, p)


def format_rate(value: float, interval: Tuple[float, float]) -> str:
    """표 형식 'a (b, c)' (백분율)"""
    return f"{100 * value:.2f} ({100 * interval[0]:.2f}, {100 * interval[1]:.2f})"


# ==============================================================================
# 경험적 지표
# ==============================================================================

@dataclass
class EvalReport:
    n: int
    tp: int
    tn: int
    fp: int
    fn: int
    theta: float
    confidence: float = DEFAULT_CONFIDENCE
    intervals: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.tp + self.tn + self.fp + self.fn != self.n:
            raise ValueError("혼동행렬 합이 n 과 다릅니다")
        if not self.intervals and self.n > 0:
            counts = {"accuracy": self.tp + self.tn, "fn_rate": self.fn, "fp_rate": self.fp}
            self.intervals = {m: clopper_pearson(k, self.n, self.confidence) for m, k in counts.items()}

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def fn_rate(self) -> float:
        return self.fn / self.n

    @property
    def fp_rate(self) -> float:
        return self.fp / self.n

    def formatted(self) -> Dict[str, str]:
        return {m: format_rate(getattr(self, m), self.intervals[m]) for m in METRICS}

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "theta": self.theta,
            "confidence": self.confidence,
            "confusion": {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn},
            "accuracy": self.accuracy,
            "fn_rate": self.fn_rate,
            "fp_rate": self.fp_rate,
            "intervals": {m: list(v) for m, v in self.intervals.items()},
            "table": self.formatted(),
        }


def report_from_predictions(predicted: Sequence[bool], labels: Sequence[int], theta: float = DEFAULT_THETA,
                            conf: float = DEFAULT_CONFIDENCE) -> EvalReport:
    pred = np.asarray(predicted, dtype=bool)
    truth = np.asarray(labels).astype(bool)
    if len(pred) != len(truth):
        raise ValueError(f"예측 {len(pred)}개, 라벨 {len(truth)}개")
    if len(pred) == 0:
        raise ValueError("평가 데이터가 비어 있습니다")
    return EvalReport(
        n=len(pred),
        tp=int(np.sum(pred & truth)),
        tn=int(np.sum(~pred & ~truth)),
        fp=int(np.sum(pred & ~truth)),
        fn=int(np.sum(~pred & truth)),
        theta=float(theta),
        confidence=conf,
    )


def evaluate(classifier, test, theta: Optional[float] = None, conf: float = DEFAULT_CONFIDENCE,
             scores: Optional[np.ndarray] = None) -> EvalReport:
    """
    테스트 집합에 대한 정확도 / FN / FP 비율

    Args:
        theta: 분류 임계값 (None 이면 분류기에 저장된 값)
        scores: 미리 계산한 F(s) (스윕에서 재사용)
    """
    theta = classifier.theta if theta is None else theta
    if len(test) == 0:
        raise ValueError("평가 데이터가 비어 있습니다")
    F = classifier.scores(test.states()) if scores is None else np.asarray(scores)
    return report_from_predictions(F >= theta, test.labels(), theta, conf)


# ==============================================================================
# SPRT
# ==============================================================================

@dataclass
class SprtResult:
    kind: str
    theta: float
    delta: float
    alpha: float
    beta: float
    decision: str              # 'H0' / 'H1' / 'undecided'
    m: int
    successes: int
    failures: int
    log_ratio: float
    label: str = ""

    @property
    def ratio(self) -> float:
        return math.exp(self.log_ratio) if self.log_ratio < 700 else math.inf

    @property
    def holds(self) -> bool:
        """H0 (정확도 ≥ θ 또는 비율 ≤ θ) 채택 여부"""
        return self.decision == "H0"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


class Sprt:
    """
    Wald 순차 확률비 검정

    accuracy: 성공 = 올바른 예측, p0 = θ + δ, p1 = θ - δ, H0 = '정확도 ≥ θ'
    rate:     성공 = 오류 사건,   p0 = θ - δ, p1 = θ + δ, H0 = '비율 ≤ θ'
    비율 p1^t (1-p1)^f / (p0^t (1-p0)^f) 은 로그 공간에서 누적합니다.
    """

    def __init__(self, kind: str = "accuracy", theta: float = SPRT_THETA_ACC, delta: float = SPRT_DELTA,
                 alpha: float = SPRT_ALPHA, beta: float = SPRT_BETA, max_samples: int = SPRT_MAX_SAMPLES,
                 label: str = ""):
        if kind not in SPRT_KINDS:
            raise ValueError(f"알 수 없는 SPRT 종류: {kind}")
        if not (0.0 < theta - delta and theta + delta < 1.0 and delta > 0.0):
            raise ValueError(f"0 < θ-δ, θ+δ < 1 이어야 합니다: θ={theta}, δ={delta}")
        if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
            raise ValueError(f"α, β 는 (0, 1) 이어야 합니다: {alpha}, {beta}")
        self.kind = kind
        self.theta = theta
        self.delta = delta
        self.alpha = alpha
        self.beta = beta
        self.max_samples = max_samples
        self.label = label
        if kind == "accuracy":
            self.p0, self.p1 = theta + delta, theta - delta
        else:
            self.p0, self.p1 = theta - delta, theta + delta
        self.log_A = math.log((1.0 - beta) / alpha)
        self.log_B = math.log(beta / (1.0 - alpha))
        self._log_success = math.log(self.p1 / self.p0)
        self._log_failure = math.log((1.0 - self.p1) / (1.0 - self.p0))
        self.successes = 0
        self.failures = 0
        self.decision = "undecided"

    @property
    def m(self) -> int:
        return self.successes + self.failures

    @property
    def log_ratio(self) -> float:
        return self.successes * self._log_success + self.failures * self._log_failure

    @property
    def decided(self) -> bool:
        return self.decision != "undecided"

    def update(self, success: bool) -> str:
        if self.decided:
            return self.decision
        if success:
            self.successes += 1
        else:
            self.failures += 1
        llr = self.log_ratio
        if llr <= self.log_B:
            self.decision = "H0"
        elif llr >= self.log_A:
            self.decision = "H1"
        return self.decision

    def run(self, stream: Iterable[bool]) -> SprtResult:
        for outcome in stream:
            if self.m >= self.max_samples:
                break
            if self.update(bool(outcome)) != "undecided":
                break
        if not self.decided:
            logger.warning("SPRT(%s): %d개 샘플 후에도 결정 불가", self.label or self.kind, self.m)
        return self.result()

    def result(self) -> SprtResult:
        return SprtResult(self.kind, self.theta, self.delta, self.alpha, self.beta, self.decision, self.m,
                          self.successes, self.failures, self.log_ratio, self.label)


def sprt(sample_stream: Iterable[bool], kind: str = "accuracy", theta: float = SPRT_THETA_ACC,
         delta: float = SPRT_DELTA, alpha: float = SPRT_ALPHA, beta: float = SPRT_BETA,
         max_samples: int = SPRT_MAX_SAMPLES) -> SprtResult:
    """스트림 원소는 '성공' 여부 (accuracy: 올바른 예측, rate: 오류 사건)"""
    return Sprt(kind, theta, delta, alpha, beta, max_samples).run(sample_stream)


def certify(classifier, test, theta: Optional[float] = None, theta_acc: float = SPRT_THETA_ACC,
            theta_fn: float = SPRT_THETA_FN, theta_fp: float = SPRT_THETA_FP, delta: float = SPRT_DELTA,
            alpha: float = SPRT_ALPHA, beta: float = SPRT_BETA,
            max_samples: int = SPRT_MAX_SAMPLES, scores: Optional[np.ndarray] = None) -> List[SprtResult]:
    """P_A ≥ θ_A, P_FN ≤ θ_FN, P_FP ≤ θ_FP 세 가지 SPRT 를 테스트 집합 순서대로 수행"""
    theta = classifier.theta if theta is None else theta
    F = classifier.scores(test.states()) if scores is None else np.asarray(scores)
    pred = F >= theta
    truth = test.labels().astype(bool)
    streams = [
        ("accuracy", "accuracy", theta_acc, pred == truth),
        ("rate", "fn_rate", theta_fn, ~pred & truth),
        ("rate", "fp_rate", theta_fp, pred & ~truth),
    ]
    results = []
    for kind, label, target, stream in streams:
        res = Sprt(kind, target, delta, alpha, beta, max_samples, label).run(stream.tolist())
        logger.info("SPRT %s (θ=%.4g): %s, m=%d", label, target, res.decision, res.m)
        results.append(res)
    return results


# ==============================================================================
# 스윕
# ==============================================================================

def default_threshold_grid(points: int = THRESHOLD_GRID_POINTS) -> np.ndarray:
    """(0, 1] 위의 0.01 간격 격자 points 개 (0.01, 0.02, …, 1.00), 0.5 포함"""
    return np.linspace(0.0, 1.0, points + 1)[1:]


def threshold_sweep(classifier, test, grid: Optional[Sequence[float]] = None,
                    scores: Optional[np.ndarray] = None) -> pd.DataFrame:
    """F(s) 를 한 번만 계산하고 각 θ 에서 지표를 다시 셉니다."""
    grid = default_threshold_grid() if grid is None else np.asarray(grid, dtype=float)
    F = classifier.scores(test.states()) if scores is None else np.asarray(scores)
    labels = test.labels()
    rows = []
    for theta in grid:
        r = report_from_predictions(F >= theta, labels, float(theta))
        rows.append({"theta": float(theta), "accuracy": r.accuracy, "fn_rate": r.fn_rate, "fp_rate": r.fp_rate,
                     "tp": r.tp, "tn": r.tn, "fp": r.fp, "fn": r.fn})
    return pd.DataFrame(rows)


def select_threshold(sweep: pd.DataFrame, max_fn_rate: float = 0.0) -> Optional[float]:
    """FN 비율이 max_fn_rate 이하인 가장 큰 θ (없으면 None)"""
    ok = sweep[sweep["fn_rate"] <= max_fn_rate]
    if ok.empty:
        return None
    return float(ok["theta"].max())


def arch_sweep(ha, train, test, layers: Sequence[int], neurons: Sequence[int], cfg=None,
               arch: str = "DNN-S") -> pd.DataFrame:
    """
    은닉층 수 × 층당 뉴런 수 격자에서 정확도 행렬을 만듭니다.
    학습에 실패한 칸은 NaN 으로 남기고 계속합니다.
    """

    if not layers or not neurons:
        raise ValueError("층/뉴런 격자가 비어 있습니다")
    cfg = cfg or TrainConfig()
    matrix = pd.DataFrame(np.nan, index=pd.Index(list(layers), name="layers"),
                          columns=pd.Index(list(neurons), name="neurons"))
    for n_layers in layers:
        for n_neurons in neurons:
            try:
                c, _ = train_classifier(arch, ha, train, cfg, hidden=[n_neurons] * n_layers)
            except (TrainingError, ValueError, np.linalg.LinAlgError) as e:
                logger.warning("아키텍처 %d×%d 학습 실패: %s", n_layers, n_neurons, e)
                continue
            matrix.loc[n_layers, n_neurons] = evaluate(c, test).accuracy
            logger.info("아키텍처 %d×%d: 정확도 %.4f", n_layers, n_neurons, matrix.loc[n_layers, n_neurons])
    return matrix


def size_sweep(ha, train, test, sizes: Sequence[int], arch: str = "DNN-S", cfg=None,
               seed: int = 0) -> pd.DataFrame:
    """학습 집합 크기별 정확도 / FN / FP (무작위 부분집합, 크기 순으로 포함 관계 유지)"""

    cfg = cfg or TrainConfig()
    order = make_rng(seed, "size-sweep").permutation(len(train))
    rows = []
    for size in sizes:
        if not 0 < size <= len(train):
            raise ValueError(f"학습 크기 {size} 가 데이터셋 크기 {len(train)} 범위를 벗어납니다")
        subset = train.subset(sorted(order[:size].tolist()))
        c, _ = train_classifier(arch, ha, subset, cfg)
        r = evaluate(c, test)
        rows.append({"size": int(size), "accuracy": r.accuracy, "fn_rate": r.fn_rate, "fp_rate": r.fp_rate})
        logger.info("학습 크기 %d: 정확도 %.4f, FN %.4f", size, r.accuracy, r.fn_rate)
    return pd.DataFrame(rows)


def benchmark(ha, train, test, kinds: Sequence[str] = ("DNN-S", "DNN-R", "SNN", "BDT", "NBOR"),
              cfg=None, conf: float = DEFAULT_CONFIDENCE) -> pd.DataFrame:
    """같은 데이터로 여러 분류기를 학습/평가하여 'a (b, c)' 형식 표를 만듭니다."""

    cfg = cfg or TrainConfig()
    rows = []
    for kind in kinds:
        c, _ = train_classifier(kind, ha, train, cfg)
        r = evaluate(c, test, conf=conf)
        row = {"classifier": kind, "accuracy": r.accuracy, "fn_rate": r.fn_rate, "fp_rate": r.fp_rate}
        row.update({f"{m}_table": text for m, text in r.formatted().items()})
        rows.append(row)
        logger.info("%s: %s", kind, r.formatted())
    return pd.DataFrame(rows)
