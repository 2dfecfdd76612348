# -*- coding: utf-8 -*-
"""
실험 설정 모듈
- JSON 실험 설정 로드 + 명령행 오버라이드 + NSC_SEED 환경변수
- 설정 해시(SHA-256)와 시드를 모든 출력에 기록
"""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from classifiers import CLASSIFIER_NAMES, MODE_ENCODINGS, TrainConfig
from constants import (
    CSV_FLOAT_FORMAT,
    DEFAULT_ARCH,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SEED,
    DEFAULT_THETA,
    SAMPLING_STRATEGIES,
    SEED_ENV_VAR,
    SPRT_ALPHA,
    SPRT_BETA,
    SPRT_DELTA,
    SPRT_THETA_ACC,
    SPRT_THETA_FN,
    SPRT_THETA_FP,
)
from falsification import GaConfig
from sampling import META_PREFIX
from simulation import OracleConfig

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """실험 설정 오류"""


@dataclass(frozen=True)
class SprtConfig:
    theta_acc: float = SPRT_THETA_ACC
    theta_fn: float = SPRT_THETA_FN
    theta_fp: float = SPRT_THETA_FP
    delta: float = SPRT_DELTA
    alpha: float = SPRT_ALPHA
    beta: float = SPRT_BETA

    def __post_init__(self):
        for name in ("alpha", "beta"):
            if not 0.0 < getattr(self, name) < 0.5:
                raise ValueError(f"{name} 는 (0, 0.5) 이어야 합니다: {getattr(self, name)}")
        if not self.delta > 0:
            raise ValueError(f"delta 는 양수여야 합니다: {self.delta}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "neuron"
    variant: Optional[str] = None
    strategy: str = "balanced"
    train_n: int = 20000
    test_n: int = 10000
    arch: str = DEFAULT_ARCH
    mode_encoding: str = "index"
    active_params: Tuple[str, ...] = ()
    theta: float = DEFAULT_THETA
    seed: int = DEFAULT_SEED
    output_dir: str = DEFAULT_OUTPUT_DIR
    jobs: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    sprt: SprtConfig = field(default_factory=SprtConfig)

    def __post_init__(self):
        if self.strategy not in SAMPLING_STRATEGIES:
            raise ConfigError(f"알 수 없는 샘플링 전략: {self.strategy} (가능: {SAMPLING_STRATEGIES})")
        if self.arch not in CLASSIFIER_NAMES:
            raise ConfigError(f"알 수 없는 분류기: {self.arch} (가능: {CLASSIFIER_NAMES})")
        if self.mode_encoding not in MODE_ENCODINGS:
            raise ConfigError(f"알 수 없는 모드 인코딩: {self.mode_encoding}")
        if self.train_n < 0 or self.test_n < 0:
            raise ConfigError("train_n, test_n 은 0 이상이어야 합니다")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta 는 [0, 1] 이어야 합니다: {self.theta}")
        if self.jobs < 1:
            raise ConfigError(f"jobs 는 1 이상이어야 합니다: {self.jobs}")

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in ("train", "oracle", "ga", "sprt")}
        data["active_params"] = list(self.active_params)
        data["train"] = self.train.to_dict()
        data["oracle"] = self.oracle.to_dict()
        data["ga"] = self.ga.to_dict()
        data["sprt"] = asdict(self.sprt)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"알 수 없는 설정 키: {unknown}")
        try:
            if "train" in data:
                data["train"] = TrainConfig(**data["train"])
            if "oracle" in data:
                data["oracle"] = OracleConfig.from_dict(data["oracle"])
            if "ga" in data:
                data["ga"] = GaConfig(**data["ga"])
            if "sprt" in data:
                data["sprt"] = SprtConfig(**data["sprt"])
            if "active_params" in data:
                data["active_params"] = tuple(data["active_params"])
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"설정 값 오류: {e}") from e

    def config_hash(self) -> str:
        return config_hash(self.to_dict())

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ExperimentConfig":
        """
        None 이 아닌 값만 덮어씀 (명령행 플래그용)
        train/oracle/ga/sprt 는 dict 로 주면 항목 단위로 병합합니다.
        """
        data = self.to_dict()
        changed = False
        for key, value in overrides.items():
            if isinstance(value, Mapping) and isinstance(data.get(key), dict):
                part = {k: v for k, v in value.items() if v is not None}
                if part:
                    data[key] = {**data[key], **part}
                    changed = True
            elif value is not None:
                data[key] = value
                changed = True
        return ExperimentConfig.from_dict(data) if changed else self


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(data: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def seed_from_env(default: int) -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV_VAR} 는 정수여야 합니다: {raw!r}") from e


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    실험 설정을 만듭니다. 우선순위: 기본값 < 설정 파일 < 명령행 < NSC_SEED

    Raises:
        ConfigError: 파일/JSON/키/값 오류
    """
    cfg = ExperimentConfig()
    if path:
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"설정 파일을 읽을 수 없습니다: {path} ({e})") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: 최상위가 객체가 아닙니다")
        cfg = ExperimentConfig.from_dict(data)
    cfg = cfg.with_overrides(overrides or {})
    env_seed = seed_from_env(cfg.seed)
    if env_seed != cfg.seed:
        logger.info("%s=%d 로 시드를 덮어씁니다", SEED_ENV_VAR, env_seed)
        cfg = replace(cfg, seed=env_seed)
    return cfg


# ==============================================================================
# 출력
# ==============================================================================

def output_meta(cfg: ExperimentConfig, command: str, **extra) -> Dict[str, Any]:
    """모든 출력에 들어가는 meta 블록"""
    return {"command": command, "config_hash": cfg.config_hash(), "seed": cfg.seed,
            "experiment": cfg.to_dict(), **extra}


def output_path(cfg: ExperimentConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def write_json(path: str, payload: Mapping[str, Any], meta: Mapping[str, Any]):
    """보고서 JSON (키 정렬, 같은 입력이면 바이트 단위로 같은 파일)"""
    data = {**payload, "meta": dict(meta)}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info("보고서 저장: %s", path)


def write_frame_csv(path: str, frame, meta: Mapping[str, Any]):
    """표 CSV, 첫 줄은 '# meta {json}'"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(META_PREFIX + json.dumps(dict(meta), sort_keys=True) + "\n")
        frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info("표 저장: %s (%d행)", path, len(frame))
