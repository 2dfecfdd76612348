# -*- coding: utf-8 -*-
"""
하이브리드 오토마톤 모듈
- 모드/흐름/가드/리셋/불변식/위험영역 데이터 모델
- JSON 모델 파일 로더 (defines, variants, 공유 flow 지원)
- 역방향 오토마톤(reverse HA) 생성
- 시뮬레이터용 컴파일 캐시
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from constants import DEFAULT_JUMP_BOUND, PARAM_SPREAD, RESET_REDRAWS, model_path
from expr_lang import (
    RESERVED,
    BinOp,
    Call,
    Compare,
    Const,
    Expr,
    Neg,
    Var,
    compile_expr,
    compile_vector,
    conjoin,
    conjuncts,
    eval_expr,
    free_vars,
    is_true_const,
    parse_expr,
    substitute,
    validate,
)

logger = logging.getLogger(__name__)


# ==============================================================================
# 예외
# ==============================================================================

class ModelError(ValueError):
    """모델 정의 오류의 기본 클래스"""


class SchemaError(ModelError):
    pass


class DanglingModeError(ModelError):
    pass


class UnsupportedResetError(ModelError):
    pass


class ResetDomainError(ModelError):
    """구간 리셋이 비었거나 원래 가드를 만족하는 값을 찾지 못함"""


# ==============================================================================
# 데이터 타입
# ==============================================================================

Box = Tuple[Tuple[float, float], ...]

# 리셋 종류 → 인자 수
RESET_KINDS = {"identity": 0, "constant": 1, "affine": 2, "interval": 2}


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    default: float
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.default <= self.hi):
            raise SchemaError(
                f"파라미터 {self.name}: 구간 [{self.lo}, {self.hi}] 이 기본값 {self.default} 을 포함하지 않음")


@dataclass(frozen=True)
class ResetSpec:
    kind: str = "identity"
    args: Tuple[Expr, ...] = ()

    def __post_init__(self):
        if self.kind not in RESET_KINDS:
            raise UnsupportedResetError(f"지원하지 않는 리셋 종류: {self.kind}")
        if len(self.args) != RESET_KINDS[self.kind]:
            raise SchemaError(
                f"리셋 {self.kind}: 인자 {RESET_KINDS[self.kind]}개 필요, {len(self.args)}개 전달")


IDENTITY_RESET = ResetSpec()


@dataclass(frozen=True)
class Mode:
    id: str
    flow: Tuple[Expr, ...]
    invariant: Expr = Const(1.0)


@dataclass(frozen=True)
class Transition:
    """
    전이 (l, g, v, l')

    core_guard: 역방향 전이에서 원래 가드의 상(image)만 담은 부분 (도메인 제약 제외)
    check_guard: 구간 리셋으로 뽑은 값이 만족해야 하는 원래 가드
    """
    source: str
    target: str
    guard: Expr
    resets: Tuple[ResetSpec, ...]
    core_guard: Optional[Expr] = None
    check_guard: Optional[Expr] = None

    @property
    def replay_guard(self) -> Expr:
        return self.core_guard if self.core_guard is not None else self.guard

    @property
    def has_interval_reset(self) -> bool:
        return any(r.kind == "interval" for r in self.resets)


@dataclass(frozen=True)
class State:
    mode: str
    x: Tuple[float, ...]
    p: Tuple[float, ...] = ()

    def with_x(self, x) -> "State":
        return State(self.mode, tuple(float(v) for v in x), self.p)


@dataclass(frozen=True, eq=False)
class HybridAutomaton:
    model_id: str
    variables: Tuple[str, ...]
    parameters: Tuple[ParameterSpec, ...]
    modes: Tuple[Mode, ...]
    transitions: Tuple[Transition, ...]
    unsafe: Expr
    sampling_domain: Mapping[str, Box]
    time_bound: float
    jump_bound: int = DEFAULT_JUMP_BOUND
    init_region: Optional[Mapping[str, Box]] = None
    unsafe_box: Optional[Box] = None
    deterministic: bool = True
    variant: Optional[str] = None
    is_reversed: bool = False
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.modes:
            raise SchemaError("모드가 하나 이상 필요합니다")
        if len(set(self.variables)) != len(self.variables):
            raise SchemaError(f"변수 이름 중복: {list(self.variables)}")
        ids = [m.id for m in self.modes]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"모드 id 중복: {ids}")
        names = self.names
        if len(set(names)) != len(names):
            raise SchemaError("변수와 파라미터 이름이 겹칩니다")
        param_names = [p.name for p in self.parameters]

        n = len(self.variables)
        for m in self.modes:
            if len(m.flow) != n:
                raise SchemaError(f"모드 {m.id}: 흐름 {len(m.flow)}개, 변수 {n}개")
            for e in m.flow:
                validate(e, names)
            validate(m.invariant, names)
        for t in self.transitions:
            for end in (t.source, t.target):
                if end not in ids:
                    raise DanglingModeError(f"전이 {t.source}->{t.target}: 존재하지 않는 모드 '{end}'")
            if len(t.resets) != n:
                raise SchemaError(f"전이 {t.source}->{t.target}: 리셋 {len(t.resets)}개, 변수 {n}개")
            validate(t.guard, names)
            for r in t.resets:
                for arg in r.args:
                    validate(arg, param_names)
        validate(self.unsafe, names)

        if self.time_bound < 0 or not math.isfinite(self.time_bound):
            raise SchemaError(f"T 는 0 이상의 유한값이어야 합니다: {self.time_bound}")
        if self.jump_bound < 0:
            raise SchemaError(f"jump_bound 는 0 이상이어야 합니다: {self.jump_bound}")

        for mode_id in ids:
            if mode_id not in self.sampling_domain:
                raise SchemaError(f"모드 {mode_id} 의 샘플링 도메인이 없습니다")
        for mode_id, box in self.sampling_domain.items():
            _check_box(box, n, f"domain[{mode_id}]")
        for mode_id, box in (self.init_region or {}).items():
            if mode_id not in ids:
                raise DanglingModeError(f"init: 존재하지 않는 모드 '{mode_id}'")
            _check_box(box, n, f"init[{mode_id}]")
        if self.unsafe_box is not None:
            _check_box(self.unsafe_box, n, "unsafe_box")

    # --- 조회 ---

    @property
    def names(self) -> Tuple[str, ...]:
        """평가 벡터 순서: 변수 다음 파라미터"""
        return tuple(self.variables) + tuple(p.name for p in self.parameters)

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def mode_ids(self) -> Tuple[str, ...]:
        return tuple(m.id for m in self.modes)

    def mode(self, mode_id: str) -> Mode:
        for m in self.modes:
            if m.id == mode_id:
                return m
        raise DanglingModeError(f"존재하지 않는 모드: '{mode_id}'")

    def mode_index(self, mode_id: str) -> int:
        try:
            return self.mode_ids.index(mode_id)
        except ValueError:
            raise DanglingModeError(f"존재하지 않는 모드: '{mode_id}'") from None

    def outgoing(self, mode_id: str) -> List[int]:
        return list(self.compiled.outgoing[mode_id])

    def domain(self, mode_id: str) -> Box:
        return self.sampling_domain[mode_id]

    def domain_hull(self) -> Box:
        """모든 모드 도메인을 감싸는 박스"""
        return _box_hull(self.sampling_domain.values(), len(self.variables))

    def default_parameters(self) -> Tuple[float, ...]:
        return tuple(p.default for p in self.parameters)

    def make_state(self, mode: str, x: Sequence[float], p: Optional[Sequence[float]] = None) -> State:
        params = self.default_parameters() if p is None else tuple(float(v) for v in p)
        return State(mode, tuple(float(v) for v in x), params)

    def vector(self, s: State) -> List[float]:
        return list(s.x) + list(s.p)

    def state_error(self, s: State) -> Optional[str]:
        """상태가 모델과 맞지 않으면 사유 문자열, 맞으면 None"""
        if s.mode not in self.mode_ids:
            return f"존재하지 않는 모드 '{s.mode}'"
        if len(s.x) != len(self.variables):
            return f"변수 차원 {len(s.x)} != {len(self.variables)}"
        if len(s.p) != len(self.parameters):
            return f"파라미터 차원 {len(s.p)} != {len(self.parameters)}"
        if not all(math.isfinite(v) for v in s.x + s.p):
            return "유한하지 않은 값 포함"
        return None

    @cached_property
    def compiled(self) -> "CompiledModel":
        return CompiledModel(self)

    def __getstate__(self):
        # 컴파일된 람다는 프로세스 간 전달 불가
        state = self.__dict__.copy()
        state.pop("compiled", None)
        return state


def _box_hull(boxes, n):
    boxes = list(boxes)
    return tuple((min(b[i][0] for b in boxes), max(b[i][1] for b in boxes)) for i in range(n))


def _check_box(box, n, where):
    if len(box) != n:
        raise SchemaError(f"{where}: 축 {len(box)}개, 변수 {n}개")
    for lo, hi in box:
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise SchemaError(f"{where}: 잘못된 구간 [{lo}, {hi}]")


# ==============================================================================
# 컴파일 캐시
# ==============================================================================

class CompiledPredicate:
    """
    이벤트 탐지용 술어

    최상위 and 조건 중 첫 번째 등식(lhs == rhs)은 교차 함수 lhs - rhs 로,
    나머지는 불리언 조건으로 분리합니다.
    """

    def __init__(self, e: Expr, names):
        parts = conjuncts(e)
        self.exact = compile_expr(e, names)
        eq_index = next(
            (i for i, p in enumerate(parts) if isinstance(p, Compare) and p.op == "=="), None)
        if eq_index is None:
            self.crossing = None
            rest = parts
        else:
            eq = parts[eq_index]
            self.crossing = compile_expr(BinOp("-", eq.left, eq.right), names)
            rest = parts[:eq_index] + parts[eq_index + 1:]
        rest = [p for p in rest if not is_true_const(p)]
        self.condition = compile_expr(conjoin(rest), names) if rest else None
        self.trivial = is_true_const(e)

    def holds(self, v) -> bool:
        return self.exact(v) != 0.0

    def condition_holds(self, v) -> bool:
        return self.condition is None or self.condition(v) != 0.0

    def holds_near(self, v, tol) -> bool:
        """등식 부분을 tol 이내로 완화한 판정"""
        if self.crossing is None:
            return self.holds(v)
        return abs(self.crossing(v)) <= tol and self.condition_holds(v)


class CompiledModel:
    def __init__(self, ha: HybridAutomaton):
        names = ha.names
        self.flows = {m.id: compile_vector(m.flow, names) for m in ha.modes}
        self.invariants = {m.id: CompiledPredicate(m.invariant, names) for m in ha.modes}
        self.unsafe = CompiledPredicate(ha.unsafe, names)
        self.guards = [CompiledPredicate(t.guard, names) for t in ha.transitions]
        self.replay_guards = [conjuncts(t.replay_guard) for t in ha.transitions]
        self.check_guards = [
            compile_expr(t.check_guard, names) if t.check_guard is not None else None
            for t in ha.transitions]
        self.resets = [[_compile_reset(r, names) for r in t.resets] for t in ha.transitions]
        self.outgoing = {
            m.id: [i for i, t in enumerate(ha.transitions) if t.source == m.id]
            for m in ha.modes}


def _compile_reset(r: ResetSpec, names):
    return r.kind, [compile_expr(a, names) for a in r.args]


# ==============================================================================
# 술어 / 전이 연산
# ==============================================================================

def in_unsafe(ha: HybridAutomaton, s: State) -> bool:
    return ha.compiled.unsafe.holds(ha.vector(s))


def in_invariant(ha: HybridAutomaton, s: State) -> bool:
    return ha.compiled.invariants[s.mode].holds(ha.vector(s))


def in_domain(ha: HybridAutomaton, s: State) -> bool:
    """샘플링 도메인 박스 포함 여부 (경계 포함)"""
    box = ha.domain(s.mode)
    return all(lo <= v <= hi for v, (lo, hi) in zip(s.x, box))


def enabled_indices(ha: HybridAutomaton, s: State) -> List[int]:
    vec = ha.vector(s)
    guards = ha.compiled.guards
    return [i for i in ha.compiled.outgoing[s.mode] if guards[i].holds(vec)]


def enabled_transitions(ha: HybridAutomaton, s: State) -> List[Transition]:
    """s.mode 에서 출발하고 s.x 에서 가드가 참인 전이 목록"""
    return [ha.transitions[i] for i in enabled_indices(ha, s)]


def apply_reset(ha: HybridAutomaton, index: int, s: State, rng=None,
                overrides: Optional[Mapping[int, float]] = None) -> State:
    """
    전이 index 의 리셋을 적용하여 도착 모드 상태를 반환

    Args:
        rng: 구간 리셋 추첨용 numpy Generator
        overrides: 변수 위치 → 고정값 (역재생 시 구간 리셋 대신 사용)
    """
    t = ha.transitions[index]
    specs = ha.compiled.resets[index]
    check = ha.compiled.check_guards[index]
    vec = ha.vector(s)

    attempts = RESET_REDRAWS if (check is not None and t.has_interval_reset and not overrides) else 1
    for _ in range(attempts):
        new_x = []
        for i, (kind, fns) in enumerate(specs):
            xi = s.x[i]
            if overrides is not None and i in overrides:
                new_x.append(float(overrides[i]))
            elif kind == "identity":
                new_x.append(xi)
            elif kind == "constant":
                new_x.append(fns[0](vec))
            elif kind == "affine":
                new_x.append(fns[0](vec) * xi + fns[1](vec))
            else:
                lo, hi = fns[0](vec), fns[1](vec)
                if lo > hi:
                    raise ResetDomainError(f"전이 {t.source}->{t.target}: 빈 구간 [{lo}, {hi}]")
                if hi > lo:
                    if rng is None:
                        raise ResetDomainError("구간 리셋에는 난수 생성기가 필요합니다")
                    new_x.append(float(rng.uniform(lo, hi)))
                else:
                    new_x.append(float(lo))
        if attempts == 1 or check(new_x + list(s.p)) != 0.0:
            return State(t.target, tuple(new_x), s.p)
    raise ResetDomainError(
        f"전이 {t.source}->{t.target}: {RESET_REDRAWS}회 추첨 동안 원래 가드를 만족하는 값이 없음")


# ==============================================================================
# 역방향 오토마톤
# ==============================================================================

def _negate(e: Expr) -> Expr:
    if isinstance(e, Neg):
        return e.operand
    return Neg(e)


def _bound_candidates(parts, var):
    """conjunct 목록에서 var 에 대한 구문적 하한/상한 식 추출"""
    lower, upper = [], []
    for p in parts:
        if not isinstance(p, Compare):
            continue
        if p.left == Var(var) and var not in free_vars(p.right):
            op, other = p.op, p.right
        elif p.right == Var(var) and var not in free_vars(p.left):
            op, other = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}[p.op], p.left
        else:
            continue
        if free_vars(other):
            continue
        if op in (">", ">=", "=="):
            lower.append(other)
        if op in ("<", "<=", "=="):
            upper.append(other)
    return lower, upper


def _combine(func, exprs):
    return exprs[0] if len(exprs) == 1 else Call(func, tuple(exprs))


def _reverse_transition(ha: HybridAutomaton, t: Transition) -> Transition:
    if t.has_interval_reset:
        raise UnsupportedResetError(
            f"전이 {t.source}->{t.target}: 구간 리셋은 다시 역전할 수 없습니다")

    inverse: Dict[str, Expr] = {}
    const_vars = []
    new_resets: List[Optional[ResetSpec]] = []
    for var, r in zip(ha.variables, t.resets):
        if r.kind == "identity":
            inverse[var] = Var(var)
            new_resets.append(IDENTITY_RESET)
        elif r.kind == "affine":
            a, b = r.args
            if isinstance(a, Const):
                if a.value == 0.0:
                    raise UnsupportedResetError(f"변수 {var}: affine 계수 a = 0 은 역변환 불가")
                if a.value == 1.0:
                    inverse[var] = BinOp("-", Var(var), b)
                    new_resets.append(ResetSpec("affine", (Const(1.0), _negate(b))))
                    continue
            inverse[var] = BinOp("/", BinOp("-", Var(var), b), a)
            new_resets.append(ResetSpec("affine", (BinOp("/", Const(1.0), a), _negate(BinOp("/", b, a)))))
        elif r.kind == "constant":
            const_vars.append(var)
            new_resets.append(None)
        else:
            raise UnsupportedResetError(f"변수 {var}: 역전할 수 없는 리셋 {r.kind}")

    parts = conjuncts(t.guard)
    const_names = set(const_vars)
    image = [Compare("==", Var(var), t.resets[ha.variables.index(var)].args[0]) for var in const_vars]
    image += [substitute(p, inverse) for p in parts if not (free_vars(p) & const_names)]

    box = ha.domain(t.source)
    domain_parts = []
    for i, var in enumerate(ha.variables):
        lo, hi = box[i]
        if var in const_names:
            guard_lo, guard_hi = _bound_candidates(parts, var)
            new_resets[i] = ResetSpec("interval", (
                _combine("max", guard_lo + [Const(lo)]),
                _combine("min", guard_hi + [Const(hi)]),
            ))
        elif const_vars:
            pre = inverse[var]
            domain_parts += [Compare(">=", pre, Const(lo)), Compare("<=", pre, Const(hi))]

    return Transition(
        source=t.target,
        target=t.source,
        guard=conjoin(image + domain_parts),
        resets=tuple(new_resets),
        core_guard=conjoin(image) if domain_parts else None,
        check_guard=t.guard if const_vars else None,
    )


def reverse(ha: HybridAutomaton) -> HybridAutomaton:
    """
    역방향 오토마톤 생성

    흐름은 부호를 바꾸고, 각 전이 (l, g, v, l') 는 (l', v(g), v⁻¹, l) 이 됩니다.
    상수 리셋 변수는 원래 가드의 구문적 경계와 출발 모드 도메인의 교집합에서
    값을 뽑는 구간 리셋으로 바뀝니다.
    """
    modes = tuple(Mode(m.id, tuple(_negate(f) for f in m.flow), m.invariant) for m in ha.modes)
    transitions = tuple(_reverse_transition(ha, t) for t in ha.transitions)
    return replace(ha, modes=modes, transitions=transitions, is_reversed=not ha.is_reversed)


def override_parameters(ha: HybridAutomaton, values: Mapping[str, float]) -> HybridAutomaton:
    """파라미터 기본값을 교체한 새 오토마톤 (구간은 유지, 필요하면 확장)"""
    unknown = set(values) - set(ha.parameter_names)
    if unknown:
        raise SchemaError(f"알 수 없는 파라미터: {sorted(unknown)}")
    params = []
    for p in ha.parameters:
        if p.name in values:
            v = float(values[p.name])
            params.append(ParameterSpec(p.name, v, min(p.lo, v), max(p.hi, v)))
        else:
            params.append(p)
    return replace(ha, parameters=tuple(params))


def describe(ha: HybridAutomaton) -> dict:
    """보고서용 모델 요약"""
    return {
        "model_id": ha.model_id,
        "variant": ha.variant,
        "variables": list(ha.variables),
        "parameters": {p.name: p.default for p in ha.parameters},
        "modes": len(ha.modes),
        "transitions": len(ha.transitions),
        "T": ha.time_bound,
        "jump_bound": ha.jump_bound,
        "deterministic": ha.deterministic,
    }


# ==============================================================================
# JSON 로더
# ==============================================================================

def _require(data, key, where="모델"):
    if key not in data:
        raise SchemaError(f"{where}: 필수 키 '{key}' 가 없습니다")
    return data[key]


def _parse_parameters(raw):
    specs = []
    if not isinstance(raw, list):
        raise SchemaError("parameters 는 목록이어야 합니다")
    for item in raw:
        if not isinstance(item, dict):
            raise SchemaError(f"파라미터 항목 형식 오류: {item!r}")
        name = _require(item, "name", "파라미터")
        default = float(_require(item, "default", f"파라미터 {name}"))
        if "interval" in item:
            lo, hi = (float(v) for v in item["interval"])
        else:
            spread = abs(default) * PARAM_SPREAD
            lo, hi = default - spread, default + spread
        specs.append(ParameterSpec(name, default, lo, hi))
    return specs


def _parse_defines(raw_items, declared, known):
    """
    define 목록을 순서대로 파싱하고 앞선 define 을 치환

    Returns:
        이름 → 치환 완료 AST
    """
    result = dict(known)
    for name, text in raw_items:
        if name in RESERVED:
            raise SchemaError(f"define 이름 '{name}' 은 예약어입니다")
        e = parse_expr(str(text), list(declared) + list(result))
        result[name] = substitute(e, result)
    return result


def _mode_defines(model_defines_raw, mode_defines_raw, declared):
    # 모드 define 먼저 (모델 define 이 참조 가능), 같은 이름은 모드 쪽이 우선
    items = list(mode_defines_raw.items())
    items += [(k, v) for k, v in model_defines_raw.items() if k not in mode_defines_raw]
    return _parse_defines(items, declared, {})


def _parse_with_defines(text, declared, defines):
    e = parse_expr(str(text), list(declared) + list(defines))
    return substitute(e, defines)


def _bound_value(v, env):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, str):
        return eval_expr(parse_expr(v, list(env)), env)
    raise SchemaError(f"구간 경계 형식 오류: {v!r}")


def _parse_box(raw, variables, env, where, partial_default=None):
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: 변수 → [lo, hi] 객체가 필요합니다")
    unknown = set(raw) - set(variables)
    if unknown:
        raise SchemaError(f"{where}: 알 수 없는 변수 {sorted(unknown)}")
    box = []
    for i, var in enumerate(variables):
        if var in raw:
            pair = raw[var]
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise SchemaError(f"{where}.{var}: [lo, hi] 형식이 필요합니다")
            box.append((_bound_value(pair[0], env), _bound_value(pair[1], env)))
        elif partial_default is not None:
            box.append(partial_default[i])
        else:
            raise SchemaError(f"{where}: 변수 '{var}' 의 구간이 없습니다")
    return tuple(box)


def _parse_region(raw, variables, mode_ids, env, where):
    """공유 박스 {var: [lo,hi]} 또는 모드별 {mode: {var: [lo,hi]}}"""
    if not isinstance(raw, dict) or not raw:
        raise SchemaError(f"{where}: 비어 있거나 형식이 잘못되었습니다")
    if all(k in variables for k in raw):
        box = _parse_box(raw, variables, env, where)
        return {m: box for m in mode_ids}
    result = {}
    for mode_id, sub in raw.items():
        if mode_id not in mode_ids:
            raise DanglingModeError(f"{where}: 존재하지 않는 모드 '{mode_id}'")
        result[mode_id] = _parse_box(sub, variables, env, f"{where}[{mode_id}]")
    return result


def _parse_reset(raw, params, where):
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: 리셋은 {{kind, args}} 객체여야 합니다")
    kind = raw.get("kind", "identity")
    if kind not in RESET_KINDS:
        raise UnsupportedResetError(f"{where}: 지원하지 않는 리셋 종류 '{kind}'")
    args = []
    for a in raw.get("args", []):
        if isinstance(a, (int, float)) and not isinstance(a, bool):
            args.append(Const(float(a)))
        else:
            args.append(parse_expr(str(a), params))
    spec = ResetSpec(kind, tuple(args))
    if kind == "affine":
        scale = eval_expr(spec.args[0], {}) if not free_vars(spec.args[0]) else None
        if scale == 0.0:
            raise SchemaError(f"{where}: affine 계수 a 는 0 이 아니어야 합니다")
    return spec


def _apply_variant(data, variant):
    variants = data.get("variants", {})
    if variant not in variants:
        raise SchemaError(f"알 수 없는 variant '{variant}' (가능: {sorted(variants)})")
    merged = dict(data)
    for key, value in variants[variant].items():
        if key == "defines":
            merged["defines"] = {**data.get("defines", {}), **value}
        else:
            merged[key] = value
    return merged


def model_from_dict(data: dict, source: Optional[str] = None,
                    variant: Optional[str] = None) -> HybridAutomaton:
    """
    JSON 객체에서 하이브리드 오토마톤을 생성합니다.

    Args:
        data: 모델 JSON 객체
        source: 원본 파일 경로 (보고서용)
        variant: variants 키의 이름 (예: 'physical_energy')

    Returns:
        검증된 HybridAutomaton
    """
    if not isinstance(data, dict):
        raise SchemaError("모델 JSON 최상위는 객체여야 합니다")
    if variant is not None:
        data = _apply_variant(data, variant)

    variables = _require(data, "variables")
    if not isinstance(variables, list) or not variables or not all(isinstance(v, str) for v in variables):
        raise SchemaError("variables 는 비어 있지 않은 문자열 목록이어야 합니다")
    for v in variables:
        if v in RESERVED:
            raise SchemaError(f"변수 이름 '{v}' 은 예약어입니다")
    params = _parse_parameters(data.get("parameters", []))
    param_names = [p.name for p in params]
    declared = list(variables) + param_names
    param_env = {p.name: p.default for p in params}

    model_defines = data.get("defines", {})
    shared_flow = data.get("flow")
    raw_modes = _require(data, "modes")
    if not isinstance(raw_modes, list):
        raise SchemaError("modes 는 목록이어야 합니다")

    modes = []
    defines_by_mode = {}
    for raw in raw_modes:
        mode_id = str(_require(raw, "id", "모드"))
        defines = _mode_defines(model_defines, raw.get("defines", {}), declared)
        defines_by_mode[mode_id] = defines
        flow_raw = raw.get("flow", shared_flow)
        if not isinstance(flow_raw, dict):
            raise SchemaError(f"모드 {mode_id}: flow 가 없습니다")
        missing = [v for v in variables if v not in flow_raw]
        extra = sorted(set(flow_raw) - set(variables))
        if missing or extra:
            raise SchemaError(f"모드 {mode_id}: flow 키 불일치 (누락 {missing}, 초과 {extra})")
        flow = tuple(_parse_with_defines(flow_raw[v], declared, defines) for v in variables)
        invariant = _parse_with_defines(raw.get("invariant", "1"), declared, defines)
        modes.append(Mode(mode_id, flow, invariant))
    mode_ids = [m.id for m in modes]

    transitions = []
    for raw in data.get("transitions", []):
        src = str(_require(raw, "from", "전이"))
        dst = str(_require(raw, "to", "전이"))
        where = f"전이 {src}->{dst}"
        for end in (src, dst):
            if end not in mode_ids:
                raise DanglingModeError(f"{where}: 존재하지 않는 모드 '{end}'")
        guard = _parse_with_defines(_require(raw, "guard", where), declared, defines_by_mode[src])
        resets_raw = raw.get("resets", {})
        unknown = set(resets_raw) - set(variables)
        if unknown:
            raise SchemaError(f"{where}: 알 수 없는 리셋 변수 {sorted(unknown)}")
        resets = tuple(
            _parse_reset(resets_raw[v], param_names, f"{where}.{v}") if v in resets_raw else IDENTITY_RESET
            for v in variables)
        transitions.append(Transition(src, dst, guard, resets))

    top_defines = _parse_defines(list(model_defines.items()), declared, {})
    unsafe = _parse_with_defines(_require(data, "unsafe"), declared, top_defines)

    domain = _parse_region(_require(data, "domain"), variables, mode_ids, param_env, "domain")
    init = _parse_region(data["init"], variables, mode_ids, param_env, "init") if "init" in data else None
    unsafe_box = None
    if "unsafe_box" in data:
        hull = _box_hull(domain.values(), len(variables))
        unsafe_box = _parse_box(data["unsafe_box"], variables, param_env, "unsafe_box", hull)

    time_bound = float(_require(data, "T"))
    jump_bound = int(data.get("jump_bound", DEFAULT_JUMP_BOUND))
    model_id = str(data.get("id") or (os.path.splitext(os.path.basename(source))[0] if source else "model"))

    ha = HybridAutomaton(
        model_id=model_id,
        variables=tuple(variables),
        parameters=tuple(params),
        modes=tuple(modes),
        transitions=tuple(transitions),
        unsafe=unsafe,
        sampling_domain=domain,
        time_bound=time_bound,
        jump_bound=jump_bound,
        init_region=init,
        unsafe_box=unsafe_box,
        deterministic=bool(data.get("deterministic", True)),
        variant=variant,
        source=source,
    )
    logger.debug("모델 로드: %s (모드 %d, 전이 %d, 변수 %d)",
                 ha.model_id, len(ha.modes), len(ha.transitions), len(ha.variables))
    return ha


def load_model(file: str, variant: Optional[str] = None) -> HybridAutomaton:
    """
    모델 JSON 파일을 읽어 검증된 오토마톤을 반환합니다.

    Args:
        file: 파일 경로 또는 번들 모델 이름 ('neuron', 'pendulum', ...)
        variant: 모델 파일의 variants 항목 이름
    """
    path = model_path(file)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise SchemaError(f"모델 파일을 찾을 수 없습니다: {file}") from None
    except json.JSONDecodeError as e:
        raise SchemaError(f"모델 JSON 파싱 실패 ({path}): {e}") from e
    return model_from_dict(data, source=path, variant=variant)
