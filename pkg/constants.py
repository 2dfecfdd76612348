# -*- coding: utf-8 -*-
"""
상수 정의 모듈
- 적분기 허용오차, 학습/GA/SPRT 기본값, 모델별 학습률 등 하드코딩된 값들을 중앙 관리
"""

import os

# ==============================================================================
# 모델 파일 관련 상수
# ==============================================================================

# 번들 모델 디렉토리 (neuron.json, pendulum.json, quadcopter.json, cruise.json)
MODELS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "models")

BUNDLED_MODELS = ["neuron", "pendulum", "quadcopter", "cruise"]

# 파라미터 구간이 명시되지 않았을 때 기본값 대비 ±50%
PARAM_SPREAD = 0.5

# 모델 파일에 jump_bound 가 없을 때
DEFAULT_JUMP_BOUND = 20

# 구간 리셋 재추첨 횟수 (원래 가드를 만족할 때까지)
RESET_REDRAWS = 100

# ==============================================================================
# 시뮬레이션 관련 상수
# ==============================================================================

DEFAULT_REL_TOL = 1e-6
DEFAULT_ABS_TOL = 1e-8
DEFAULT_EVENT_TOL = 1e-9        # 이벤트 시각 이분법 허용오차 (초)
MAX_STEP_DIVISOR = 100          # max_step 기본값 = T / 100
DEFAULT_EVENT_PROBES = 2        # 스텝 내부 이벤트 탐색 지점 수
DEFAULT_N_ROLLOUTS = 100        # 비결정 모델 오라클의 랜덤워크 횟수
DEFAULT_BACKWARD_RETRIES = 50
DEFAULT_REPLAY_TOL = 1e-4       # 역방향 재생 시 가드 허용오차 (상대)
DEFAULT_REJECTION_BUDGET = 10000

# ==============================================================================
# 샘플링 관련 상수
# ==============================================================================

SAMPLING_STRATEGIES = ["uniform", "balanced", "dynamics"]
DYNAMICS_HORIZON_FACTOR = 2.0   # T' = 2T
DYNAMICS_GRID_POINTS = 200      # Δ = T' / 200
DYNAMICS_MIN_SEEDS = 100        # m0 = max(100, n / 10)
CSV_FLOAT_FORMAT = "%.17g"      # 비트 단위 왕복 보장

# ==============================================================================
# 분류기 관련 상수
# ==============================================================================

# 아키텍처 프로파일: (은닉층 크기, 은닉 활성함수, 출력 종류)
ARCHITECTURES = {
    "DNN-S": ([10, 10, 10], "tansig", "logsig"),
    "DNN-R": ([10, 10, 10], "relu", "softmax"),
    "SNN": ([20], "tansig", "logsig"),
}
DEFAULT_ARCH = "DNN-S"
DEFAULT_THETA = 0.5
NGUYEN_WIDROW_FACTOR = 0.7
OUTPUT_INIT_SCALE = 0.5

# Levenberg-Marquardt
LM_MAX_EPOCHS = 1000
LM_MU_INIT = 1e-3
LM_MU_INC = 10.0
LM_MU_DEC = 0.1
LM_MU_MAX = 1e10
LM_MIN_IMPROVEMENT = 1e-7

# BDT
BDT_MAX_DEPTH = 20
BDT_MIN_LEAF = 5

# 모델별 적응 학습률
ADAPT_LEARNING_RATES = {
    "neuron": 0.0005,
    "quadcopter": 0.003,
    "helicopter": 0.003,
    "powertrain": 0.003,
}
DEFAULT_ADAPT_LEARNING_RATE = 0.003
DEFAULT_ADAPT_EPOCHS = 200

# ==============================================================================
# 평가/인증 관련 상수
# ==============================================================================

DEFAULT_CONFIDENCE = 0.99
SPRT_ALPHA = 0.01
SPRT_BETA = 0.01
SPRT_DELTA = 0.001
SPRT_THETA_ACC = 0.997
SPRT_THETA_FN = 0.002
SPRT_THETA_FP = 0.002
SPRT_MAX_SAMPLES = 1_000_000

THRESHOLD_GRID_POINTS = 100

# ==============================================================================
# 팔시피케이션(GA) 관련 상수
# ==============================================================================

GA_POPULATION = 100
GA_GENERATIONS = 50
GA_TOURNAMENT = 2
GA_CROSSOVER_RATE = 0.8
GA_MUTATION_RATE = 0.1
GA_MUTATION_SIGMA = 0.05        # 축별 도메인 폭 대비
GA_ELITISM = 2
FITNESS_CAP = 1e12              # F(s) == b(s) 일 때 o(s) 상한
DEDUP_RESOLUTION = 1e-9
ADAPT_MAX_ITERS = 50

# ==============================================================================
# CLI / 출력 관련 상수
# ==============================================================================

SEED_ENV_VAR = "NSC_SEED"
DEFAULT_SEED = 0
DEFAULT_OUTPUT_DIR = "out"

# 그래프 색상 (Tableau 팔레트 기반)
PLOT_COLORS = {
    "accuracy": "#4c78a8",   # Blue
    "fn": "#e45756",         # Red
    "fp": "#f58518",         # Orange
    "positive": "#edc948",   # Yellow
    "negative": "#ffffff",
    "trace": "#54a24b",      # Green
}
DEFAULT_PLOT_COLOR = "#dddddd"

# ==============================================================================
# 헬퍼 함수
# ==============================================================================

def get_plot_color(name: str) -> str:
    """지표 이름에 따른 색상 코드를 반환합니다."""
    return PLOT_COLORS.get(name, DEFAULT_PLOT_COLOR)


def model_path(name: str) -> str:
    """
    번들 모델 이름 또는 경로를 실제 파일 경로로 변환

    Args:
        name: 'neuron' 같은 번들 모델 이름, 또는 JSON 파일 경로

    Returns:
        모델 JSON 파일 경로
    """
    if os.path.exists(name):
        return name
    base = os.path.splitext(os.path.basename(name))[0]
    if base in BUNDLED_MODELS:
        return os.path.join(MODELS_DIR, base + ".json")
    return name


def adapt_learning_rate(model_id: str) -> float:
    """모델 이름에 맞는 적응 학습률 (없으면 기본값)"""
    return ADAPT_LEARNING_RATES.get(model_id, DEFAULT_ADAPT_LEARNING_RATE)
