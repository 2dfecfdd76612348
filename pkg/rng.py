# -*- coding: utf-8 -*-
"""
재현 가능한 난수 모듈
- 마스터 시드 + 용도 태그 + 인덱스 → 독립 시드 파생
- 샘플별 시드를 미리 파생하므로 병렬 실행 순서와 무관하게 결과가 같음
"""

import zlib

import numpy as np

# 파생 시드 상한 (CSV/JSON 정수로 안전하게 저장)
_SEED_MASK = (1 << 63) - 1


def _tag_to_int(tag):
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def derive_seed(master_seed, *keys) -> int:
    """
    마스터 시드에서 하위 시드를 파생합니다.

    Args:
        master_seed: 실험 마스터 시드
        *keys: 용도 태그(문자열) 또는 인덱스(정수)

    Returns:
        0 이상 2^63 미만의 정수 시드
    """
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return ((int(state[0]) << 32) | int(state[1])) & _SEED_MASK


def make_rng(master_seed, *keys) -> np.random.Generator:
    """파생 시드로 numpy Generator 생성"""
    return np.random.default_rng(derive_seed(master_seed, *keys))
