# -*- coding: utf-8 -*-
"""
수식 언어 모듈
- 흐름(flow), 가드, 리셋, 불변식, 위험영역(unsafe), 제어법칙을 표현하는 산술/논리 AST
- 재귀 하강 파서 + 재귀 평가기 + 역파싱 가능한 프린터
- 시뮬레이터용 컴파일러 (AST → 위치 인자 파이썬 함수)

문법 (EBNF):
    expr  := or
    or    := and ("or" and)*
    and   := cmp ("and" cmp)*
    cmp   := add ((< | <= | > | >= | == | !=) add)?
    add   := mul ((+ | -) mul)*
    mul   := unary ((* | /) unary)*
    unary := "-" unary | "not" unary | pow
    pow   := atom ("^" unary)?
    atom  := number | ident | func "(" args ")" | "(" expr ")"

단항 마이너스는 ^ 보다 약하게 결합합니다 ("-2^2" = -4).
비교/논리 연산은 1.0 / 0.0 을 반환하여 가드와 흐름이 같은 평가기를 공유합니다.
"""

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union


# ==============================================================================
# 예외
# ==============================================================================

class ExprError(ValueError):
    """수식 처리 오류의 기본 클래스"""


class ExprSyntaxError(ExprError):
    def __init__(self, message, position):
        super().__init__(f"{message} (위치 {position})")
        self.position = position


class UnknownIdentifierError(ExprError):
    def __init__(self, name, position=None):
        where = f" (위치 {position})" if position is not None else ""
        super().__init__(f"선언되지 않은 식별자: '{name}'{where}")
        self.name = name
        self.position = position


class ArityError(ExprError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    """0 나누기, 음수 제곱근, NaN/무한대 결과"""


# ==============================================================================
# AST 노드
# ==============================================================================

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str          # + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str          # < <= > >= == !=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str          # and / or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Expr", ...]


@dataclass(frozen=True)
class IfExpr:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


Expr = Union[Const, Var, Neg, Not, BinOp, Compare, BoolOp, Call, IfExpr]
Environment = Mapping[str, float]

# 함수 이름 → (최소 인자 수, 최대 인자 수; None = 무제한)
FUNCTIONS = {
    "sin": (1, 1),
    "cos": (1, 1),
    "tan": (1, 1),
    "exp": (1, 1),
    "sqrt": (1, 1),
    "abs": (1, 1),
    "sign": (1, 1),
    "min": (2, None),
    "max": (2, None),
    "if": (3, 3),
}
NAMED_CONSTANTS = {"pi": math.pi}
KEYWORDS = {"and", "or", "not"}
RESERVED = KEYWORDS | set(FUNCTIONS) | set(NAMED_CONSTANTS)

COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")


# ==============================================================================
# 토크나이저
# ==============================================================================

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+)
    | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op><=|>=|==|!=|[≤≥≠−+\-*/^<>=(),])
""", re.VERBOSE)

# 유니코드/단일 '=' 정규화
_OP_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "−": "-", "=": "=="}


@dataclass(frozen=True)
class _Token:
    kind: str        # number / ident / op / end
    text: str
    pos: int


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"알 수 없는 문자 '{text[pos]}'", pos)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group(kind)
            if kind == "op":
                tok = _OP_ALIASES.get(tok, tok)
            tokens.append(_Token(kind, tok, pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


# ==============================================================================
# 파서
# ==============================================================================

class _Parser:
    """재귀 하강 파서 (문법은 모듈 docstring 참고)"""

    def __init__(self, text, declared):
        self.tokens = _tokenize(text)
        self.index = 0
        self.declared = declared

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def at_op(self, *ops):
        tok = self.peek()
        return tok.kind == "op" and tok.text in ops

    def at_keyword(self, word):
        tok = self.peek()
        return tok.kind == "ident" and tok.text == word

    def expect_op(self, op):
        tok = self.advance()
        if tok.kind != "op" or tok.text != op:
            found = tok.text or "입력 끝"
            raise ExprSyntaxError(f"'{op}' 가 필요하지만 '{found}' 발견", tok.pos)
        return tok

    def parse(self):
        expr = self.parse_or()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"예상치 못한 토큰 '{tok.text}'", tok.pos)
        return expr

    def parse_or(self):
        left = self.parse_and()
        while self.at_keyword("or"):
            self.advance()
            left = BoolOp("or", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_cmp()
        while self.at_keyword("and"):
            self.advance()
            left = BoolOp("and", left, self.parse_cmp())
        return left

    def parse_cmp(self):
        left = self.parse_add()
        if self.at_op(*COMPARISON_OPS):
            op = self.advance().text
            return Compare(op, left, self.parse_add())
        return left

    def parse_add(self):
        left = self.parse_mul()
        while self.at_op("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.parse_mul())
        return left

    def parse_mul(self):
        left = self.parse_unary()
        while self.at_op("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.parse_unary())
        return left

    def parse_unary(self):
        if self.at_op("-"):
            self.advance()
            return Neg(self.parse_unary())
        if self.at_keyword("not"):
            self.advance()
            return Not(self.parse_unary())
        return self.parse_pow()

    def parse_pow(self):
        base = self.parse_atom()
        if self.at_op("^"):
            self.advance()
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        tok = self.advance()
        if tok.kind == "number":
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            inner = self.parse_or()
            self.expect_op(")")
            return inner
        if tok.kind == "ident":
            name = tok.text
            if name in KEYWORDS:
                raise ExprSyntaxError(f"키워드 '{name}' 위치가 잘못됨", tok.pos)
            if name in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[name])
            if name in FUNCTIONS:
                return self.parse_call(tok)
            if self.declared is not None and name not in self.declared:
                raise UnknownIdentifierError(name, tok.pos)
            return Var(name)
        found = tok.text or "입력 끝"
        raise ExprSyntaxError(f"피연산자가 필요하지만 '{found}' 발견", tok.pos)

    def parse_call(self, name_tok):
        self.expect_op("(")
        args = []
        if not self.at_op(")"):
            args.append(self.parse_or())
            while self.at_op(","):
                self.advance()
                args.append(self.parse_or())
        self.expect_op(")")
        _check_arity(name_tok.text, len(args), name_tok.pos)
        if name_tok.text == "if":
            return IfExpr(args[0], args[1], args[2])
        return Call(name_tok.text, tuple(args))


def _check_arity(func, count, pos=None):
    lo, hi = FUNCTIONS[func]
    if count < lo or (hi is not None and count > hi):
        expected = str(lo) if lo == hi else (f"{lo} 이상" if hi is None else f"{lo}~{hi}")
        where = f" (위치 {pos})" if pos is not None else ""
        raise ArityError(f"함수 {func}() 인자 수 오류: {expected}개 필요, {count}개 전달{where}")


def parse_expr(text: str, declared: Optional[Iterable[str]] = None) -> Expr:
    """
    수식 문자열을 AST로 파싱합니다.

    Args:
        text: 수식 문자열 (예: "0.04*v^2 + 5*v + 140 - u + I")
        declared: 허용되는 변수/파라미터 이름 목록 (None이면 검사 생략)

    Returns:
        Expr AST

    Raises:
        ExprSyntaxError, UnknownIdentifierError, ArityError
    """
    if text is None or not str(text).strip():
        raise ExprSyntaxError("빈 수식", 0)
    names = None if declared is None else set(declared)
    return _Parser(str(text), names).parse()


# ==============================================================================
# 평가기
# ==============================================================================

def _div(a, b):
    if b == 0:
        raise ExprDomainError("0으로 나누기")
    return a / b


def _pow(a, b):
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError) as e:
        raise ExprDomainError(f"거듭제곱 정의역 오류: {a} ^ {b}") from e


def _sqrt(a):
    if a < 0:
        raise ExprDomainError(f"음수의 제곱근: sqrt({a})")
    return math.sqrt(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError as e:
        raise ExprDomainError(f"exp 오버플로: exp({a})") from e


def _sign(a):
    if a > 0:
        return 1.0
    if a < 0:
        return -1.0
    return 0.0


_RUNTIME = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": _exp,
    "sqrt": _sqrt,
    "abs": abs,
    "sign": _sign,
    "min": min,
    "max": max,
}

_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _eval(e, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnknownIdentifierError(e.name) from None
    if isinstance(e, BinOp):
        return _ARITH[e.op](_eval(e.left, env), _eval(e.right, env))
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Compare):
        return 1.0 if _CMP[e.op](_eval(e.left, env), _eval(e.right, env)) else 0.0
    if isinstance(e, BoolOp):
        left = _eval(e.left, env) != 0.0
        if e.op == "and":
            return 1.0 if left and _eval(e.right, env) != 0.0 else 0.0
        return 1.0 if left or _eval(e.right, env) != 0.0 else 0.0
    if isinstance(e, Not):
        return 0.0 if _eval(e.operand, env) != 0.0 else 1.0
    if isinstance(e, IfExpr):
        # 선택된 분기만 평가
        if _eval(e.cond, env) != 0.0:
            return _eval(e.then, env)
        return _eval(e.orelse, env)
    if isinstance(e, Call):
        return _RUNTIME[e.func](*[_eval(a, env) for a in e.args])
    raise TypeError(f"알 수 없는 노드: {e!r}")


def eval_expr(e: Expr, env: Environment) -> float:
    """
    AST를 환경(이름 → 값)에서 평가합니다.

    Returns:
        실수 값 (비교/논리는 1.0 또는 0.0)

    Raises:
        ExprDomainError: 0 나누기, 음수 제곱근, NaN/무한대 결과
    """
    try:
        value = _eval(e, env)
    except ZeroDivisionError as err:
        raise ExprDomainError("0으로 나누기") from err
    except (ValueError, OverflowError) as err:
        if isinstance(err, ExprError):
            raise
        raise ExprDomainError(str(err)) from err
    if not math.isfinite(value):
        raise ExprDomainError(f"유한하지 않은 결과: {value}")
    return float(value)


# ==============================================================================
# 프린터 (역파싱 보장)
# ==============================================================================

_BIN_PREC = {"+": 4, "-": 4, "*": 5, "/": 5, "^": 7}


def _prec(e):
    if isinstance(e, Const):
        return 8 if e.value >= 0 else 6
    if isinstance(e, (Var, Call, IfExpr)):
        return 8
    if isinstance(e, BinOp):
        return _BIN_PREC[e.op]
    if isinstance(e, (Neg, Not)):
        return 6
    if isinstance(e, Compare):
        return 3
    if isinstance(e, BoolOp):
        return 2 if e.op == "and" else 1
    raise TypeError(f"알 수 없는 노드: {e!r}")


def _format_number(value):
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _wrap(e, needed):
    text = print_expr(e)
    return f"({text})" if _prec(e) < needed else text


def print_expr(e: Expr) -> str:
    """AST를 다시 파싱 가능한 문자열로 출력 (필요한 괄호만 추가)"""
    if isinstance(e, Const):
        if e.value < 0:
            return "-" + _format_number(-e.value)
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        if e.op == "^":
            return f"{_wrap(e.left, 8)} ^ {_wrap(e.right, 6)}"
        prec = _BIN_PREC[e.op]
        return f"{_wrap(e.left, prec)} {e.op} {_wrap(e.right, prec + 1)}"
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, 6)
    if isinstance(e, Not):
        return "not " + _wrap(e.operand, 6)
    if isinstance(e, Compare):
        return f"{_wrap(e.left, 4)} {e.op} {_wrap(e.right, 4)}"
    if isinstance(e, BoolOp):
        prec = _prec(e)
        return f"{_wrap(e.left, prec)} {e.op} {_wrap(e.right, prec + 1)}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, IfExpr):
        return f"if({print_expr(e.cond)}, {print_expr(e.then)}, {print_expr(e.orelse)})"
    raise TypeError(f"알 수 없는 노드: {e!r}")


# ==============================================================================
# AST 유틸리티
# ==============================================================================

def _children(e):
    if isinstance(e, (Neg, Not)):
        return (e.operand,)
    if isinstance(e, (BinOp, Compare, BoolOp)):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, IfExpr):
        return (e.cond, e.then, e.orelse)
    return ()


def free_vars(e: Expr) -> set:
    """AST에 등장하는 변수 이름 집합"""
    if isinstance(e, Var):
        return {e.name}
    names = set()
    for child in _children(e):
        names |= free_vars(child)
    return names


def validate(e: Expr, declared: Iterable[str]) -> None:
    """모든 변수 참조가 선언 목록에 있는지 확인"""
    allowed = set(declared)
    for name in sorted(free_vars(e)):
        if name not in allowed:
            raise UnknownIdentifierError(name)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """변수를 다른 AST로 치환 (동시 치환)"""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, Not):
        return Not(substitute(e.operand, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Compare):
        return Compare(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, BoolOp):
        return BoolOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.func, tuple(substitute(a, mapping) for a in e.args))
    if isinstance(e, IfExpr):
        return IfExpr(substitute(e.cond, mapping), substitute(e.then, mapping),
                      substitute(e.orelse, mapping))
    raise TypeError(f"알 수 없는 노드: {e!r}")


def conjuncts(e: Expr) -> List[Expr]:
    """최상위 and 체인을 원자 조건 목록으로 분해"""
    if isinstance(e, BoolOp) and e.op == "and":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def conjoin(parts: Sequence[Expr]) -> Expr:
    """조건 목록을 and 체인으로 결합 (빈 목록은 참)"""
    if not parts:
        return Const(1.0)
    result = parts[0]
    for part in parts[1:]:
        result = BoolOp("and", result, part)
    return result


def is_true_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value != 0.0


# ==============================================================================
# 컴파일러 (시뮬레이터 핫루프용)
# ==============================================================================

_COMPILE_NS = {
    "_div": _div,
    "_pow": _pow,
    "_sqrt": _sqrt,
    "_exp": _exp,
    "_sign": _sign,
    "_sin": math.sin,
    "_cos": math.cos,
    "_tan": math.tan,
    "_abs": abs,
    "_min": min,
    "_max": max,
    "__builtins__": {"float": float, "bool": bool},
}


def _to_source(e, index):
    if isinstance(e, Const):
        return f"({e.value!r})"
    if isinstance(e, Var):
        try:
            return f"x[{index[e.name]}]"
        except KeyError:
            raise UnknownIdentifierError(e.name) from None
    if isinstance(e, Neg):
        return f"(-{_to_source(e.operand, index)})"
    if isinstance(e, BinOp):
        left, right = _to_source(e.left, index), _to_source(e.right, index)
        if e.op == "/":
            return f"_div({left}, {right})"
        if e.op == "^":
            return f"_pow({left}, {right})"
        return f"({left} {e.op} {right})"
    if isinstance(e, Compare):
        return f"float({_to_source(e.left, index)} {e.op} {_to_source(e.right, index)})"
    if isinstance(e, BoolOp):
        return (f"float(bool({_to_source(e.left, index)}) {e.op} "
                f"bool({_to_source(e.right, index)}))")
    if isinstance(e, Not):
        return f"float(not {_to_source(e.operand, index)})"
    if isinstance(e, IfExpr):
        return (f"({_to_source(e.then, index)} if {_to_source(e.cond, index)} "
                f"else {_to_source(e.orelse, index)})")
    if isinstance(e, Call):
        args = ", ".join(_to_source(a, index) for a in e.args)
        return f"_{e.func}({args})"
    raise TypeError(f"알 수 없는 노드: {e!r}")


def compile_expr(e: Expr, names: Sequence[str]) -> Callable[[Sequence[float]], float]:
    """
    AST를 위치 인자 벡터를 받는 함수로 컴파일합니다.

    Args:
        e: 검증된 AST
        names: 벡터의 각 위치에 대응하는 이름 (변수 + 파라미터 순서)

    Returns:
        f(x) -> float, x[i] 는 names[i] 의 값
    """
    index = {name: i for i, name in enumerate(names)}
    source = "lambda x: " + _to_source(e, index)
    return eval(compile(source, "<expr>", "eval"), dict(_COMPILE_NS))


def compile_vector(exprs: Sequence[Expr], names: Sequence[str]) -> Callable[[Sequence[float]], list]:
    """여러 AST를 한 번의 호출로 평가하는 함수로 컴파일 (흐름 벡터용)"""
    index = {name: i for i, name in enumerate(names)}
    body = ", ".join(_to_source(e, index) for e in exprs)
    source = f"lambda x: [{body}]"
    return eval(compile(source, "<flow>", "eval"), dict(_COMPILE_NS))


def environment(names: Sequence[str], values: Sequence[float]) -> Dict[str, float]:
    """이름/값 목록으로 평가 환경 생성"""
    if len(names) != len(values):
        raise ValueError(f"이름 {len(names)}개, 값 {len(values)}개: 길이 불일치")
    return {name: float(v) for name, v in zip(names, values)}
