import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telesum.expr import (Const, GenericAtom, Hyper, Mul, ParseError, Pow, Sum, Var, free_vars, from_json,
                          generic_symbols, normalize, parse, print_expr, shift, substitute, to_json)
from telesum.errors import PoleError
from telesum.oracle import Binding, eval_expr


def test_parse_nested_generic_sum():
    e = parse("Sum(k,0,a, Sum(j,0,k, X[j]))")
    assert isinstance(e, Sum) and e.var == "k" and e.upper == Var("a")
    inner = e.body
    assert isinstance(inner, Sum) and inner.var == "j"
    assert inner.body == GenericAtom("X", "j", 0)


def test_parse_weighted_binomial_double_sum():
    e = parse("Sum(k,0,a, k*binom(n,k)*Sum(j,0,k, binom(n,j)))")
    assert isinstance(e.body, Mul)
    kinds = {type(f).__name__ for f in e.body.factors}
    assert {"Hyper", "Sum"} <= kinds


def test_parse_alternating_square():
    e = parse("Sum(k,0,a, (-1)^k * (Sum(j,0,k, X[j]))^2)")
    factors = e.body.factors
    assert Hyper("altsign", (Var("k"),)) in factors
    assert any(isinstance(f, Pow) and isinstance(f.base, Sum) and f.exp == 2 for f in factors)


@pytest.mark.parametrize("text", ["Sum(k,0,a", "X[k*k]", "X[k]^(-1)", "Sum(k,0,a,X[k])/Sum(j,0,a,X[j])", "foo(k)"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_print_formats():
    e = parse("Sum(j,0,a,X[j])")
    assert print_expr(e) == "Sum(j,0,a,X[j])"
    assert print_expr(e, "latex") == r"\sum_{j=0}^{a} X_{j}"
    e = normalize(parse("(a+1)*Sum(j,0,a,X[j]) - Sum(j,0,a,j*X[j])"))
    assert print_expr(e) == "(a+1)*Sum(i,0,a,X[i]) - Sum(i,0,a,i*X[i])"
    assert json.loads(print_expr(e, "json")) == to_json(e)


def test_shift_examples():
    assert shift(parse("X[k]"), "k", 1) == parse("X[k+1]")
    assert shift(parse("Sum(l,0,k,X[l])"), "k", 1) == normalize(parse("Sum(l,0,k+1,X[l])"))
    assert shift(parse("k*X[k-1]"), "k", 2) == normalize(parse("(k+2)*X[k+1]"))


def test_normalize_examples():
    assert normalize(parse("Sum(j,0,-1,X[j])")) == Const(0)
    assert normalize(parse("2*X[k] + 3*X[k]")) == normalize(parse("5*X[k]"))
    diff = normalize(parse("Sum(l,0,k,X[l]) - Sum(l,0,k-1,X[l])"))
    assert diff != normalize(parse("X[k]"))
    assert len(generic_symbols(diff)) == 1 and "Sum" in print_expr(diff)


def test_normalize_sign_and_binomial_rules():
    assert normalize(parse("(-1)^(k+1)")) == normalize(parse("-(-1)^k"))
    assert normalize(parse("((-1)^k)^2")) == Const(1)
    assert normalize(parse("binom(n,2)")) == normalize(parse("n*(n-1)/2"))


def test_substitute_examples():
    e = parse("Sum(k,0,a,Sum(j,0,k,X[j]))")
    assert normalize(substitute(e, "X", parse("binom(n,k)"))) == normalize(parse("Sum(k,0,a,Sum(j,0,k,binom(n,j)))"))
    assert normalize(substitute(parse("X[k+1]"), "X", parse("harmonic(k)"))) == normalize(parse("harmonic(k+1)"))
    assert substitute(parse("X[k]"), "X", parse("X[k]")) == parse("X[k]")


def test_free_vars_and_symbols():
    e = parse("Sum(k,0,a,x^k*binom(n,k)*Y[k])")
    assert free_vars(e) == {"a", "n", "x"}
    assert generic_symbols(e) == {"Y"}


def test_json_roundtrip():
    e = parse("Sum(k,0,a,(-1)^k*Sum(j,0,k,X[j]/binom(n,j))^2) + harmonic(a)/3")
    assert from_json(json.loads(json.dumps(to_json(e)))) == e


# -- property tests --------------------------------------------------------

ATOMS = ["X[{v}]", "X[{v}+1]", "Y[{v}-1]", "binom(n,{v})", "harmonic({v})", "(-1)^{v}", "{v}", "n",
         "1/binom(n,{v})", "factorial({v})", "2^{v}", "3", "1/2"]
BOUND = ["j", "l", "m", "p", "q"]


@st.composite
def expressions(draw, var="k", depth=0):
    if depth >= 4 or draw(st.booleans()):
        return draw(st.sampled_from(ATOMS)).format(v=var)
    op = draw(st.sampled_from(["+", "*", "sum", "pow"]))
    if op == "sum":
        inner = BOUND[depth]
        return f"Sum({inner},0,{var},{draw(expressions(inner, depth + 1))})"
    if op == "pow":
        return f"({draw(expressions(var, depth + 1))})^2"
    return f"({draw(expressions(var, depth + 1))}){op}({draw(expressions(var, depth + 1))})"


@settings(max_examples=80, deadline=None)
@given(expressions())
def test_print_parse_roundtrip(text):
    e = normalize(parse(text))
    assert normalize(parse(print_expr(e))) == e


@settings(max_examples=80, deadline=None)
@given(expressions())
def test_normalize_idempotent(text):
    e = normalize(parse(text))
    assert normalize(e) == e


@settings(max_examples=60, deadline=None)
@given(expressions(), st.integers(-3, 3))
def test_shift_inverse(text, m):
    e = normalize(parse(text))
    assert shift(shift(e, "k", m), "k", -m) == e


@settings(max_examples=40, deadline=None)
@given(expressions(), st.integers(0, 12))
def test_shift_commutes_with_evaluation(text, i):
    e = normalize(parse(text))
    tables = {"X": [Fraction(j * j - 3, j + 2) for j in range(40)], "Y": [Fraction(2 * j + 1) for j in range(40)]}
    b = Binding({"n": Fraction(7)}, tables)
    try:
        expected = eval_expr(e, b.with_values(k=i + 1))
    except PoleError:
        with pytest.raises(PoleError):
            eval_expr(shift(e, "k", 1), b.with_values(k=i))
        return
    assert eval_expr(shift(e, "k", 1), b.with_values(k=i)) == expected
