# -*- coding: utf-8 -*-
"""
상태 분류기 모듈
- 피드포워드 NN (DNN-S / DNN-R / SNN): Nguyen-Widrow 초기화, Levenberg-Marquardt 배치 학습,
  경사하강 점진 적응
- 베이스라인: 최근접 이웃(NBOR), 이진 결정트리(BDT, Gini)
- JSON 저장/로드 (kind: mlp / bdt / nbor)
"""

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, softmax

from constants import (
    ARCHITECTURES,
    BDT_MAX_DEPTH,
    BDT_MIN_LEAF,
    DEFAULT_ARCH,
    DEFAULT_THETA,
    LM_MAX_EPOCHS,
    LM_MIN_IMPROVEMENT,
    LM_MU_DEC,
    LM_MU_INC,
    LM_MU_INIT,
    LM_MU_MAX,
    NGUYEN_WIDROW_FACTOR,
    OUTPUT_INIT_SCALE,
)
from ha_core import HybridAutomaton, State

logger = logging.getLogger(__name__)

MODE_ENCODINGS = ("index", "onehot")
HIDDEN_ACTIVATIONS = ("tansig", "logsig", "relu")
OUTPUT_ACTIVATIONS = {"logsig": 1, "softmax": 2}
CLASSIFIER_KINDS = ("mlp", "bdt", "nbor")
CLASSIFIER_NAMES = (*ARCHITECTURES, "BDT", "NBOR")


# ==============================================================================
# 예외
# ==============================================================================

class ClassifierFormatError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


# ==============================================================================
# 입력 특징 / 정규화
# ==============================================================================

@dataclass(frozen=True)
class FeatureMap:
    """
    상태 → 신경망 입력 벡터

    입력 순서: 변수, 활성 파라미터, 모드 (모드가 둘 이상일 때만).
    모드는 index 인코딩이면 정수 1개, onehot 이면 모드 수만큼의 0/1 입력.
    각 입력은 [lo, hi] → [-1, 1] 로 정규화하며 lo == hi 인 입력은 0 으로 고정합니다.
    """
    variables: Tuple[str, ...]
    mode_ids: Tuple[str, ...]
    param_names: Tuple[str, ...]
    active_params: Tuple[str, ...]
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    mode_encoding: str = "index"

    def __post_init__(self):
        if self.mode_encoding not in MODE_ENCODINGS:
            raise ValueError(f"알 수 없는 모드 인코딩: {self.mode_encoding}")
        if len(self.lo) != self.n_inputs or len(self.hi) != self.n_inputs:
            raise ValueError(f"정규화 구간 {len(self.lo)}개, 입력 {self.n_inputs}개")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("정규화 구간 lo > hi")

    @classmethod
    def for_model(cls, ha: HybridAutomaton, active_params: Sequence[str] = (),
                  mode_encoding: str = "index") -> "FeatureMap":
        active = tuple(p for p in ha.parameter_names if p in set(active_params))
        lo = [b[0] for b in ha.domain_hull()]
        hi = [b[1] for b in ha.domain_hull()]
        specs = {p.name: p for p in ha.parameters}
        lo += [specs[p].lo for p in active]
        hi += [specs[p].hi for p in active]
        n_modes = len(ha.mode_ids)
        if n_modes > 1:
            if mode_encoding == "index":
                lo.append(0.0)
                hi.append(float(n_modes - 1))
            else:
                lo += [0.0] * n_modes
                hi += [1.0] * n_modes
        return cls(tuple(ha.variables), tuple(ha.mode_ids), tuple(ha.parameter_names), active,
                   tuple(float(v) for v in lo), tuple(float(v) for v in hi), mode_encoding)

    @property
    def n_continuous(self) -> int:
        return len(self.variables) + len(self.active_params)

    @property
    def n_mode_inputs(self) -> int:
        if len(self.mode_ids) <= 1:
            return 0
        return 1 if self.mode_encoding == "index" else len(self.mode_ids)

    @property
    def n_inputs(self) -> int:
        return self.n_continuous + self.n_mode_inputs

    def raw(self, states: Sequence[State]) -> np.ndarray:
        """정규화 전 입력 행렬 (샘플 수 × 입력 수)"""
        n_x, n_p = len(self.variables), len(self.param_names)
        p_index = [self.param_names.index(p) for p in self.active_params]
        out = np.zeros((len(states), self.n_inputs))
        for row, s in enumerate(states):
            if len(s.x) != n_x or len(s.p) != n_p:
                raise ValueError(f"상태 차원 ({len(s.x)}, {len(s.p)}) != ({n_x}, {n_p})")
            try:
                m = self.mode_ids.index(s.mode)
            except ValueError:
                raise ValueError(f"분류기가 모르는 모드: '{s.mode}'") from None
            out[row, :n_x] = s.x
            for j, k in enumerate(p_index):
                out[row, n_x + j] = s.p[k]
            if self.n_mode_inputs == 1:
                out[row, self.n_continuous] = m
            elif self.n_mode_inputs > 1:
                out[row, self.n_continuous + m] = 1.0
        return out

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        width = np.asarray(self.hi) - lo
        flat = width == 0.0
        z = 2.0 * (raw - lo) / np.where(flat, 1.0, width) - 1.0
        return np.where(flat, 0.0, z)

    def encode(self, states: Sequence[State]) -> np.ndarray:
        return self.normalize(self.raw(states))

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMap":
        return cls(tuple(d["variables"]), tuple(d["mode_ids"]), tuple(d["param_names"]),
                   tuple(d["active_params"]), tuple(float(v) for v in d["lo"]),
                   tuple(float(v) for v in d["hi"]), d.get("mode_encoding", "index"))


# ==============================================================================
# 활성 함수
# ==============================================================================

def tansig(z):
    """2 / (1 + e^(-2z)) - 1 (tanh 와 동일)"""
    return np.tanh(z)


def logsig(z):
    return expit(z)


def relu(z):
    return np.maximum(z, 0.0)


_ACTIVATIONS = {
    "tansig": tansig,
    "logsig": logsig,
    "relu": relu,
    "softmax": lambda z: softmax(z, axis=0),
}


def _derivative(tag, z, a):
    if tag == "tansig":
        return 1.0 - a * a
    if tag == "logsig":
        return a * (1.0 - a)
    if tag == "relu":
        return (z > 0.0).astype(float)
    raise ValueError(f"은닉층에 쓸 수 없는 활성 함수: {tag}")


# ==============================================================================
# 다층 퍼셉트론
# ==============================================================================

@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = LM_MAX_EPOCHS
    mu_init: float = LM_MU_INIT
    mu_inc: float = LM_MU_INC
    mu_dec: float = LM_MU_DEC
    mu_max: float = LM_MU_MAX
    min_improvement: float = LM_MIN_IMPROVEMENT
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs 는 0 이상이어야 합니다: {self.max_epochs}")
        for name in ("mu_init", "mu_max", "min_improvement"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} 는 양수여야 합니다")
        if not self.mu_inc > 1.0 or not 0.0 < self.mu_dec < 1.0:
            raise ValueError("mu_inc > 1, 0 < mu_dec < 1 이어야 합니다")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class MlpClassifier:
    """
    F = f_l ∘ … ∘ f_1 (정규화된 입력), f_i(p) = g_i(W_i p + b_i)

    W_i 는 n_i × n_(i-1). 출력이 logsig 1개면 F 는 그 값, softmax 2개면 양성 성분.
    """
    arch: str
    sizes: Tuple[int, ...]
    activations: Tuple[str, ...]
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    feature: FeatureMap
    theta: float = DEFAULT_THETA
    kind: str = field(default="mlp", init=False)

    def __post_init__(self):
        if len(self.sizes) < 2 or any(n < 1 for n in self.sizes):
            raise ValueError(f"층 크기는 모두 양수여야 합니다: {self.sizes}")
        n_layers = len(self.sizes) - 1
        if len(self.activations) != n_layers or len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ValueError("층 수와 가중치/활성 함수 개수가 맞지 않습니다")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.sizes[i + 1], self.sizes[i]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"층 {i + 1}: W{W.shape}, b{b.shape} 가 크기 {self.sizes} 와 맞지 않습니다")
        for tag in self.activations[:-1]:
            if tag not in HIDDEN_ACTIVATIONS:
                raise ValueError(f"은닉층 활성 함수 오류: {tag}")
        out = self.activations[-1]
        if OUTPUT_ACTIVATIONS.get(out) != self.sizes[-1]:
            raise ValueError(f"출력층 {out} 과 출력 크기 {self.sizes[-1]} 가 맞지 않습니다")
        if self.sizes[0] != self.feature.n_inputs:
            raise ValueError(f"입력 크기 {self.sizes[0]} != 특징 수 {self.feature.n_inputs}")

    # --- 파라미터 벡터 ---

    @property
    def n_parameters(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def parameters(self) -> np.ndarray:
        """층마다 W(행 우선) 다음 b 를 이어 붙인 벡터"""
        return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in zip(self.weights, self.biases)])

    def with_parameters(self, vec: np.ndarray) -> "MlpClassifier":
        weights, biases = [], []
        pos = 0
        for W, b in zip(self.weights, self.biases):
            weights.append(np.array(vec[pos:pos + W.size]).reshape(W.shape))
            pos += W.size
            biases.append(np.array(vec[pos:pos + b.size]))
            pos += b.size
        return replace(self, weights=tuple(weights), biases=tuple(biases))

    # --- 순전파 ---

    def _layers(self, Z: np.ndarray):
        """Z: (입력 수, 샘플 수). 층별 (pre-activation, activation) 목록"""
        pre, acts = [], [Z]
        a = Z
        for W, b, tag in zip(self.weights, self.biases, self.activations):
            z = W @ a + b[:, None]
            a = _ACTIVATIONS[tag](z)
            pre.append(z)
            acts.append(a)
        return pre, acts

    def _output(self, a_last: np.ndarray) -> np.ndarray:
        return a_last[1] if self.activations[-1] == "softmax" else a_last[0]

    def scores_normalized(self, X: np.ndarray) -> np.ndarray:
        """정규화된 입력 행렬 (샘플 수 × 입력 수) 에 대한 F"""
        _, acts = self._layers(np.asarray(X, dtype=float).T)
        return self._output(acts[-1])

    def scores(self, states: Sequence[State]) -> np.ndarray:
        return self.scores_normalized(self.feature.encode(states))

    def jacobian(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        역전파로 dF/dθ 계산

        Returns:
            (F: 샘플 수, J: 샘플 수 × 파라미터 수)
        """
        pre, acts = self._layers(np.asarray(X, dtype=float).T)
        n = acts[0].shape[1]
        out = acts[-1]
        if self.activations[-1] == "softmax":
            # F = p1, dF/dz_j = p1 (δ_j1 - p_j)
            delta = np.vstack([-out[1] * out[0], out[1] * (1.0 - out[1])])
        else:
            delta = out * (1.0 - out)

        blocks = [None] * len(self.weights)
        for i in reversed(range(len(self.weights))):
            a_prev = acts[i]
            gW = (delta[:, None, :] * a_prev[None, :, :]).reshape(-1, n)
            blocks[i] = np.concatenate([gW.T, delta.T], axis=1)
            if i > 0:
                delta = (self.weights[i].T @ delta) * _derivative(self.activations[i - 1], pre[i - 1], acts[i])
        return self._output(out), np.concatenate(blocks, axis=1)


def arch_profile(arch: str, hidden: Optional[Sequence[int]] = None):
    """아키텍처 이름 → (은닉층 크기, 은닉 활성 함수, 출력 종류). hidden 을 주면 크기만 교체"""
    if arch not in ARCHITECTURES:
        raise ValueError(f"알 수 없는 아키텍처: {arch} (가능: {list(ARCHITECTURES)})")
    sizes, hidden_act, out = ARCHITECTURES[arch]
    return list(hidden if hidden is not None else sizes), hidden_act, out


def init_network(arch: str, feature: FeatureMap, rng_seed: int = 0,
                 hidden: Optional[Sequence[int]] = None, theta: float = DEFAULT_THETA) -> MlpClassifier:
    """
    Nguyen-Widrow 초기화

    은닉층 가중치는 무작위 방향으로 뽑은 뒤 행 노름을 0.7·n_i^(1/n_(i-1)) 로 맞추고,
    바이어스는 [-β, β] 에 고르게 펼칩니다. 출력층은 작은 균등 난수입니다.
    """
    hidden_sizes, hidden_act, out = arch_profile(arch, hidden)
    if any(n < 1 for n in hidden_sizes):
        raise ValueError(f"층 크기는 양수여야 합니다: {hidden_sizes}")
    sizes = [feature.n_inputs] + hidden_sizes + [OUTPUT_ACTIVATIONS[out]]
    rng = np.random.default_rng(rng_seed)

    weights, biases = [], []
    for i in range(1, len(sizes)):
        n_in, n_out = sizes[i - 1], sizes[i]
        if i < len(sizes) - 1:
            beta = NGUYEN_WIDROW_FACTOR * n_out ** (1.0 / n_in)
            W = rng.uniform(-1.0, 1.0, (n_out, n_in))
            W = beta * W / np.linalg.norm(W, axis=1, keepdims=True)
            if n_out > 1:
                b = beta * np.linspace(-1.0, 1.0, n_out) * np.sign(W[:, 0])
            else:
                b = np.zeros(1)
        else:
            W = rng.uniform(-OUTPUT_INIT_SCALE, OUTPUT_INIT_SCALE, (n_out, n_in))
            b = rng.uniform(-OUTPUT_INIT_SCALE, OUTPUT_INIT_SCALE, n_out)
        weights.append(W)
        biases.append(b)
    activations = [hidden_act] * len(hidden_sizes) + [out]
    return MlpClassifier(arch, tuple(sizes), tuple(activations), tuple(weights), tuple(biases),
                         feature, theta)


def forward(c, s: State) -> float:
    """상태 하나에 대한 분류기 출력 F(s)"""
    return float(c.scores([s])[0])


def classify(c, s: State, theta: Optional[float] = None) -> bool:
    """F(s) ≥ θ 이면 양성"""
    theta = c.theta if theta is None else theta
    return forward(c, s) >= theta


# ==============================================================================
# 학습
# ==============================================================================

def fit_lm(c: MlpClassifier, X: np.ndarray, y: np.ndarray,
           cfg: Optional[TrainConfig] = None) -> Tuple[MlpClassifier, List[float]]:
    """
    정규화된 입력 X, 라벨 y 에 대한 Levenberg-Marquardt 배치 학습

    (JᵀJ + μI)Δ = -Jᵀe 를 풀어 MSE 가 줄면 채택(μ ÷ 10), 아니면 μ × 10 후 재시도.
    μ 가 상한을 넘으면 그때까지의 최선 가중치로 멈춥니다.
    """
    cfg = cfg or TrainConfig()
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise TrainingError("학습 데이터가 비어 있습니다")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise TrainingError("라벨은 0 또는 1 이어야 합니다")

    current = c
    theta = c.parameters()
    F, J = current.jacobian(X)
    e = F - y
    mse = float(np.mean(e * e))
    curve = [mse]
    mu = cfg.mu_init
    eye = np.eye(len(theta))

    for epoch in range(cfg.max_epochs):
        if mse == 0.0:
            break
        g = J.T @ e
        A = J.T @ J
        accepted = None
        while mu <= cfg.mu_max:
            try:
                step = np.linalg.solve(A + mu * eye, -g)
            except np.linalg.LinAlgError:
                mu *= cfg.mu_inc
                continue
            candidate = current.with_parameters(theta + step)
            e_new = candidate.scores_normalized(X) - y
            mse_new = float(np.mean(e_new * e_new))
            if np.isfinite(mse_new) and mse_new < mse:
                accepted = (candidate, theta + step, mse_new)
                mu *= cfg.mu_dec
                break
            mu *= cfg.mu_inc
        if accepted is None:
            logger.warning("LM: epoch %d 에서 μ > %.3g, 최선 가중치로 중단 (MSE %.4g)", epoch, cfg.mu_max, mse)
            break

        current, theta, mse_new = accepted
        if mse_new > mse:
            raise TrainingError(f"LM 채택 단계에서 MSE 증가: {mse} → {mse_new}")
        improvement = mse - mse_new
        mse = mse_new
        curve.append(mse)
        if improvement < cfg.min_improvement:
            break
        F, J = current.jacobian(X)
        e = F - y

    logger.info("LM 학습 종료: epoch %d, MSE %.6g", len(curve) - 1, mse)
    return current, curve


def train_lm(c: MlpClassifier, train, cfg: Optional[TrainConfig] = None) -> Tuple[MlpClassifier, List[float]]:
    """SampleSet 으로 LM 학습 (학습된 분류기, epoch 별 MSE)"""
    if len(train) == 0:
        raise TrainingError("학습 데이터가 비어 있습니다")
    return fit_lm(c, c.feature.encode(train.states()), train.labels(), cfg)


def squared_error_gradient(c: MlpClassifier, s: State, label: int) -> np.ndarray:
    """(F(s) - b)² 의 θ 에 대한 기울기"""
    F, J = c.jacobian(c.feature.encode([s]))
    return 2.0 * (F[0] - float(label)) * J[0]


def adapt_gd(c: MlpClassifier, samples: Iterable, learning_rate: float) -> MlpClassifier:
    """
    샘플 순서대로 한 번씩 θ ← θ - lr·∇(F(s) - b)² 를 적용합니다.

    samples 는 Sample 또는 (State, label) 쌍의 목록입니다.
    """
    if learning_rate < 0:
        raise ValueError(f"learning_rate 는 0 이상이어야 합니다: {learning_rate}")
    current = c
    if learning_rate == 0:
        return current
    theta = c.parameters()
    for item in samples:
        s, label = (item.state, item.label) if hasattr(item, "state") else item
        theta = theta - learning_rate * squared_error_gradient(current, s, int(label))
        current = current.with_parameters(theta)
    return current


# ==============================================================================
# 베이스라인: 최근접 이웃
# ==============================================================================

@dataclass(frozen=True, eq=False)
class NborClassifier:
    """학습 집합에서 가장 가까운 점의 라벨 (정규화된 연속 좌표, 같은 모드 우선)"""
    feature: FeatureMap
    points: np.ndarray        # (N, 연속 입력 수), 정규화됨
    modes: np.ndarray         # (N,) 모드 인덱스
    labels: np.ndarray        # (N,) 0/1
    theta: float = DEFAULT_THETA
    kind: str = field(default="nbor", init=False)

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("NBOR 참조 집합이 비어 있습니다")

    def _query(self, states: Sequence[State]):
        X = self.feature.encode(states)
        k = self.feature.n_continuous
        modes = np.array([self.feature.mode_ids.index(s.mode) for s in states], dtype=int)
        return X[:, :k], modes

    def nearest(self, s: State) -> int:
        q, modes = self._query([s])
        dist = np.linalg.norm(self.points - q[0], axis=1)
        same = self.modes == modes[0]
        if same.any():
            dist = np.where(same, dist, np.inf)
        return int(np.argmin(dist))

    def scores(self, states: Sequence[State]) -> np.ndarray:
        return np.array([float(self.labels[self.nearest(s)]) for s in states])


def nbor_train(ref, feature: FeatureMap) -> NborClassifier:
    if len(ref) == 0:
        raise TrainingError("NBOR 참조 집합이 비어 있습니다")
    states = ref.states()
    points = feature.encode(states)[:, :feature.n_continuous]
    modes = np.array([feature.mode_ids.index(s.mode) for s in states], dtype=int)
    return NborClassifier(feature, points, modes, ref.labels().astype(int))


def nbor_classify(ref: NborClassifier, s: State) -> bool:
    """동거리면 인덱스가 작은 참조점의 라벨"""
    return bool(ref.labels[ref.nearest(s)])


# ==============================================================================
# 베이스라인: 이진 결정트리 (CART, Gini)
# ==============================================================================

def _gini(pos, total):
    if total == 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, min_leaf):
    """(불순도 감소량, 특징, 임계값) 또는 None"""
    n = len(y)
    parent = _gini(y.sum(), n)
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        left_pos = np.cumsum(ys)[:-1]
        left_n = np.arange(1, n)
        total_pos = ys.sum()
        valid = (xs[1:] != xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        p_l = left_pos / left_n
        p_r = (total_pos - left_pos) / (n - left_n)
        impurity = (left_n * 2 * p_l * (1 - p_l) + (n - left_n) * 2 * p_r * (1 - p_r)) / n
        impurity = np.where(valid, impurity, np.inf)
        k = int(np.argmin(impurity))
        gain = parent - impurity[k]
        if gain > 1e-15 and (best is None or gain > best[0]):
            best = (gain, j, 0.5 * (xs[k] + xs[k + 1]))
    return best


@dataclass(frozen=True, eq=False)
class BdtClassifier:
    """노드 배열 표현: feature < 0 이면 잎"""
    feature: FeatureMap
    split_feature: Tuple[int, ...]
    threshold: Tuple[float, ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    leaf_label: Tuple[int, ...]
    theta: float = DEFAULT_THETA
    kind: str = field(default="bdt", init=False)

    @property
    def n_nodes(self) -> int:
        return len(self.split_feature)

    @property
    def depth(self) -> int:
        def walk(node):
            if self.split_feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))
        return walk(0)

    def leaf_of(self, x: np.ndarray) -> int:
        node = 0
        while self.split_feature[node] >= 0:
            node = self.left[node] if x[self.split_feature[node]] <= self.threshold[node] else self.right[node]
        return node

    def scores(self, states: Sequence[State]) -> np.ndarray:
        X = self.feature.encode(states)
        return np.array([float(self.leaf_label[self.leaf_of(x)]) for x in X])


def bdt_train(train, feature: FeatureMap, max_depth: int = BDT_MAX_DEPTH,
              min_leaf: int = BDT_MIN_LEAF) -> BdtClassifier:
    """
    CART: Gini 불순도 감소가 가장 큰 축/임계값으로 분할.
    순수하거나 깊이/최소 잎 크기 제한에 걸리면 잎 (다수결, 동수면 양성).
    """
    if len(train) == 0:
        raise TrainingError("BDT 학습 데이터가 비어 있습니다")
    X = feature.encode(train.states())
    y = train.labels().astype(int)
    nodes = {"feature": [], "threshold": [], "left": [], "right": [], "label": []}

    def new_node():
        for v in nodes.values():
            v.append(-1 if v is not nodes["threshold"] else 0.0)
        return len(nodes["feature"]) - 1

    def grow(idx, depth):
        node = new_node()
        ys = y[idx]
        pos = int(ys.sum())
        nodes["label"][node] = 1 if 2 * pos >= len(ys) else 0
        if pos in (0, len(ys)) or depth >= max_depth or len(ys) < 2 * min_leaf:
            return node
        split = _best_split(X[idx], ys, min_leaf)
        if split is None:
            return node
        _, j, thr = split
        mask = X[idx, j] <= thr
        nodes["feature"][node] = j
        nodes["threshold"][node] = float(thr)
        nodes["left"][node] = grow(idx[mask], depth + 1)
        nodes["right"][node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    tree = BdtClassifier(feature, tuple(nodes["feature"]), tuple(nodes["threshold"]), tuple(nodes["left"]),
                         tuple(nodes["right"]), tuple(nodes["label"]))
    logger.info("BDT: 노드 %d개, 깊이 %d", tree.n_nodes, tree.depth)
    return tree


def bdt_classify(t: BdtClassifier, s: State) -> bool:
    return bool(t.scores([s])[0])


# ==============================================================================
# 학습 진입점
# ==============================================================================

def train_classifier(kind: str, ha: HybridAutomaton, train, cfg: Optional[TrainConfig] = None,
                     mode_encoding: str = "index", hidden: Optional[Sequence[int]] = None):
    """
    이름으로 분류기를 만들고 학습합니다.

    Args:
        kind: 'DNN-S' / 'DNN-R' / 'SNN' / 'BDT' / 'NBOR'
        train: 학습 SampleSet (config 의 active_params 를 입력 특징으로 사용)

    Returns:
        (분류기, epoch 별 MSE; NN 이 아니면 빈 목록)
    """
    cfg = cfg or TrainConfig()
    train.check_model(ha)
    feature = FeatureMap.for_model(ha, train.config.get("active_params", ()), mode_encoding)
    if kind == "BDT":
        return bdt_train(train, feature), []
    if kind == "NBOR":
        return nbor_train(train, feature), []
    c = init_network(kind, feature, cfg.seed, hidden)
    return train_lm(c, train, cfg)


# ==============================================================================
# 저장 / 로드
# ==============================================================================

def classifier_to_dict(c) -> dict:
    base = {"kind": c.kind, "theta": c.theta, "feature": c.feature.to_dict(),
            "normalization": {"lo": list(c.feature.lo), "hi": list(c.feature.hi)}}
    if c.kind == "mlp":
        base.update({
            "arch": c.arch,
            "sizes": list(c.sizes),
            "activations": list(c.activations),
            "weights": [W.tolist() for W in c.weights],
            "biases": [b.tolist() for b in c.biases],
        })
    elif c.kind == "nbor":
        base.update({"points": c.points.tolist(), "modes": c.modes.tolist(), "labels": c.labels.tolist()})
    else:
        base.update({"split_feature": list(c.split_feature), "threshold": list(c.threshold),
                     "left": list(c.left), "right": list(c.right), "leaf_label": list(c.leaf_label)})
    return base


def classifier_from_dict(d: dict):
    try:
        kind = d["kind"]
        feature = FeatureMap.from_dict(d["feature"])
        theta = float(d.get("theta", DEFAULT_THETA))
        if kind == "mlp":
            return MlpClassifier(
                d.get("arch", DEFAULT_ARCH), tuple(int(n) for n in d["sizes"]), tuple(d["activations"]),
                tuple(np.array(W, dtype=float).reshape(len(W), -1) for W in d["weights"]),
                tuple(np.array(b, dtype=float) for b in d["biases"]), feature, theta)
        if kind == "nbor":
            points = np.array(d["points"], dtype=float).reshape(len(d["points"]), feature.n_continuous)
            return NborClassifier(feature, points, np.array(d["modes"], dtype=int),
                                  np.array(d["labels"], dtype=int), theta)
        if kind == "bdt":
            return BdtClassifier(feature, tuple(int(v) for v in d["split_feature"]),
                                 tuple(float(v) for v in d["threshold"]), tuple(int(v) for v in d["left"]),
                                 tuple(int(v) for v in d["right"]), tuple(int(v) for v in d["leaf_label"]),
                                 theta)
    except (KeyError, TypeError, ValueError) as e:
        raise ClassifierFormatError(f"분류기 형식 오류: {e}") from e
    raise ClassifierFormatError(f"알 수 없는 분류기 종류: {d.get('kind')} (가능: {CLASSIFIER_KINDS})")


def save_classifier(c, path: str, meta: Optional[dict] = None):
    data = classifier_to_dict(c)
    if meta:
        data["meta"] = meta
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=1)
    logger.info("분류기 저장: %s (%s)", path, c.kind)


def load_classifier(path: str, ha: Optional[HybridAutomaton] = None):
    """
    Raises:
        ClassifierFormatError: JSON/스키마 오류, 또는 모델과 차원 불일치
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ClassifierFormatError(f"분류기 파일을 읽을 수 없습니다: {path} ({e})") from e
    if not isinstance(data, dict):
        raise ClassifierFormatError(f"{path}: 최상위가 객체가 아닙니다")
    c = classifier_from_dict(data)
    if ha is not None:
        f = c.feature
        if (f.variables, f.param_names, f.mode_ids) != (tuple(ha.variables), tuple(ha.parameter_names),
                                                      tuple(ha.mode_ids)):
            raise ClassifierFormatError(f"{path}: 분류기 입력이 모델 {ha.model_id} 과 맞지 않습니다")
    return c
