# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from expr_lang import (
    ArityError,
    BinOp,
    BoolOp,
    Call,
    Compare,
    Const,
    ExprDomainError,
    ExprSyntaxError,
    IfExpr,
    Neg,
    Not,
    UnknownIdentifierError,
    Var,
    compile_expr,
    compile_vector,
    conjoin,
    conjuncts,
    environment,
    eval_expr,
    free_vars,
    parse_expr,
    print_expr,
    substitute,
)

NAMES = ("x", "y", "v")


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return Var(NAMES[int(rng.integers(len(NAMES)))])
        if rng.random() < 0.5:
            return Const(float(rng.integers(0, 50)))
        return Const(float(rng.uniform(0.0, 100.0)))
    kind = int(rng.integers(8))
    sub = lambda: _random_expr(rng, depth - 1)  # noqa: E731
    if kind == 0:
        return Neg(sub())
    if kind == 1:
        return Not(sub())
    if kind == 2:
        return BinOp(["+", "-", "*", "/", "^"][int(rng.integers(5))], sub(), sub())
    if kind == 3:
        return Compare(["<", "<=", ">", ">=", "==", "!="][int(rng.integers(6))], sub(), sub())
    if kind == 4:
        return BoolOp(["and", "or"][int(rng.integers(2))], sub(), sub())
    if kind == 5:
        return Call(["sin", "cos", "abs", "sign"][int(rng.integers(4))], (sub(),))
    if kind == 6:
        return Call(["min", "max"][int(rng.integers(2))], (sub(), sub()))
    return IfExpr(sub(), sub(), sub())


def test_neuron_flow_evaluates():
    e = parse_expr("0.04*v^2 + 5*v + 140 - u + I", ["v", "u", "I"])
    assert eval_expr(e, {"v": -65.0, "u": 5.0, "I": 40.0}) == pytest.approx(0.04 * 65 ** 2 - 325 + 140 - 5 + 40)


def test_unary_minus_binds_looser_than_power():
    assert eval_expr(parse_expr("-2^2"), {}) == -4.0
    assert eval_expr(parse_expr("2^3^2"), {}) == 512.0
    assert eval_expr(parse_expr("2^-1"), {}) == 0.5


def test_comparisons_and_logic_return_one_or_zero():
    env = {"v": 31.0}
    assert eval_expr(parse_expr("v >= 30"), env) == 1.0
    assert eval_expr(parse_expr("v >= 30 and v < 31"), env) == 0.0
    assert eval_expr(parse_expr("not v < 30 or v > 100"), env) == 1.0


def test_unicode_operators_are_normalized():
    assert parse_expr("v ≥ 30") == parse_expr("v >= 30")
    assert parse_expr("x ≠ 1") == parse_expr("x != 1")
    assert parse_expr("x = 1") == parse_expr("x == 1")


def test_named_constant_and_functions():
    assert eval_expr(parse_expr("cos(pi)"), {}) == pytest.approx(-1.0)
    assert eval_expr(parse_expr("max(1, 5, 3)"), {}) == 5.0
    assert eval_expr(parse_expr("if(x > 0, 1, -1)"), {"x": -2.0}) == -1.0


def test_syntax_error_reports_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("1 + * 2")
    assert info.value.position == 4


@pytest.mark.parametrize("text", ["", "   ", "(1 + 2", "1 2", "x $ y", "and x"])
def test_malformed_input(text):
    with pytest.raises(ExprSyntaxError):
        parse_expr(text)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_expr("v + w", ["v"])
    assert info.value.name == "w"


def test_arity_is_checked():
    with pytest.raises(ArityError):
        parse_expr("sin(1, 2)")
    with pytest.raises(ArityError):
        parse_expr("min(1)")


@pytest.mark.parametrize("text", ["1 / 0", "sqrt(-1)", "exp(1000)", "(-8) ^ 0.5"])
def test_domain_errors(text):
    with pytest.raises(ExprDomainError):
        eval_expr(parse_expr(text), {})


def test_if_only_evaluates_selected_branch():
    assert eval_expr(parse_expr("if(x == 0, 0, 1 / x)"), {"x": 0.0}) == 0.0


def test_print_parse_roundtrip_randomized():
    rng = np.random.default_rng(12345)
    for _ in range(1000):
        e = _random_expr(rng, 4)
        text = print_expr(e)
        assert parse_expr(text) == e, text


def test_compiled_agrees_with_evaluator():
    rng = np.random.default_rng(7)
    fn_names = list(NAMES)
    checked = 0
    for _ in range(1000):
        e = _random_expr(rng, 4)
        values = rng.uniform(-3.0, 3.0, size=len(NAMES)).tolist()
        env = environment(fn_names, values)
        try:
            expected = eval_expr(e, env)
        except ExprDomainError:
            continue
        assert compile_expr(e, fn_names)(values) == expected, print_expr(e)
        checked += 1
    assert checked > 300


def test_compile_vector():
    exprs = [parse_expr("v + u"), parse_expr("v * u")]
    assert compile_vector(exprs, ["v", "u"])([2.0, 3.0]) == [5.0, 6.0]


def test_substitute_and_free_vars():
    e = parse_expr("x + y * x")
    out = substitute(e, {"x": parse_expr("z - 1")})
    assert free_vars(out) == {"y", "z"}
    assert eval_expr(out, {"y": 2.0, "z": 4.0}) == 3.0 + 2.0 * 3.0


def test_conjuncts_split_and_rejoin():
    e = parse_expr("x > 0 and y < 1 and v == 2")
    parts = conjuncts(e)
    assert len(parts) == 3
    assert conjoin(parts) == e
    assert eval_expr(conjoin([]), {}) == 1.0


def test_environment_length_mismatch():
    with pytest.raises(ValueError):
        environment(["x"], [1.0, 2.0])


def test_nonfinite_result_is_a_domain_error():
    with pytest.raises(ExprDomainError):
        eval_expr(parse_expr("x * x"), {"x": 1e200})
    assert math.isfinite(eval_expr(parse_expr("x * x"), {"x": 1e100}))
