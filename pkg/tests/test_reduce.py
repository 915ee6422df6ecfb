import json
from fractions import Fraction

import pytest

from telesum.algebra import RatFunc
from telesum.errors import UnsupportedError
from telesum.expr import normalize, parse, print_expr, subs_params, substitute
from telesum.oracle import Binding, check_identity, check_reduction, eval_expr
from telesum.reduce import (Constraint, ReductionResult, SpecializationFailure, SpecializedIdentity,
                            interchange, post_simplify, reduce_generic, specialize)

n = RatFunc.var("n")

DOUBLE = "Sum(k,0,a,Sum(j,0,k,X[j]))"
WEIGHTED = "Sum(k,0,a,k*X[k]*Sum(j,0,k,X[j]))"
SQUARE = "Sum(k,0,a,Sum(j,0,k,X[j])^2)"
ALT = "Sum(k,0,a,(-1)^k*Sum(j,0,k,X[j])^2)"


def same(e, text):
    return normalize(e) == normalize(parse(text))


def test_double_sum_reduces_without_constraints():
    r = reduce_generic(DOUBLE)
    assert r.constraints == ()
    assert same(r.closed_form, "(a+1)*Sum(i,0,a,X[i]) - Sum(i,0,a,i*X[i])")
    assert print_expr(r.closed_form) == "(a+1)*Sum(i,0,a,X[i]) - Sum(i,0,a,i*X[i])"


def test_weighted_sum_needs_one_constraint():
    r = reduce_generic(WEIGHTED, simple=False)
    assert r.params == ("c",)
    assert same(r.closed_form, "c*Sum(i,0,a,X[i])^2 + Y[a]*Sum(i,0,a,X[i])"
                               " + Sum(i,0,a,-c*X[i]^2 + i*X[i]^2 - X[i]*Y[i])")
    (con,) = r.constraints
    assert con.symbol == "Y"
    assert same(con.rhs, "(1+a)*X[a+1] - 2*c*X[a+1]")


def test_weighted_sum_simple_representation():
    r = reduce_generic(WEIGHTED)
    assert same(r.closed_form, "c*Sum(i,0,a,X[i])^2 - c*Sum(i,0,a,X[i]^2) - Sum(i,0,a,X[i]*Y[i])"
                               " + Sum(i,0,a,X[i])*Y[a] + Sum(i,0,a,i*X[i]^2)")


def test_square_of_running_sum():
    r = reduce_generic(SQUARE)
    assert same(r.closed_form, "(a+c)*Sum(k,0,a,X[k])^2 - c*Sum(k,0,a,X[k]^2) - Sum(k,0,a,X[k]*Y[k])"
                               " + Y[a]*Sum(k,0,a,X[k]) + Sum(k,0,a,X[k]^2) - Sum(k,0,a,k*X[k]^2)")
    (con,) = r.constraints
    assert same(con.rhs, "-2*a*X[a+1] - 2*c*X[a+1]")


def test_alternating_square_matches_up_to_gauge():
    # our constant and sequence are -1/2 times the conventional ones
    r = reduce_generic(ALT)
    gauge_c = {"c": -RatFunc.var("c") / 2}

    def regauge(e):
        return subs_params(substitute(e, "Y", parse("-1/2*Y[k]"), "k"), gauge_c)

    assert same(regauge(r.closed_form),
                "(-c/2 + 1/2*(-1)^a)*Sum(k,0,a,X[k])^2 + 1/2*c*Sum(k,0,a,X[k]^2)"
                " + 1/2*Sum(k,0,a,(-1)^k*X[k]^2) + 1/2*Sum(k,0,a,X[k]*Y[k]) - 1/2*Y[a]*Sum(k,0,a,X[k])")
    (con,) = r.constraints
    # Y' = -2Y so the difference scales by -2
    assert same(regauge(con.rhs), "-1/2*(2*(-1)^a*X[a+1] - 2*c*X[a+1])")


@pytest.mark.parametrize("text", [DOUBLE, WEIGHTED, SQUARE, ALT])
def test_reductions_are_sound(text):
    r = reduce_generic(text, verify=False)
    report = check_reduction(r, size=15, seed=5, trials=3)
    assert report.passed, report.summary()


def test_gave_up_when_constraints_are_forbidden():
    r = reduce_generic(WEIGHTED, max_constraints=0)
    assert r.case == "gave-up"
    assert normalize(r.closed_form) == normalize(parse(WEIGHTED))


def test_cubic_summand_is_unsupported():
    with pytest.raises(UnsupportedError):
        reduce_generic("Sum(k,0,a,Sum(j,0,k,X[j])^3)")


def test_result_json_roundtrip():
    r = reduce_generic(SQUARE)
    back = ReductionResult.from_json(json.loads(json.dumps(r.to_json())))
    assert back == r
    con = r.constraints[0]
    assert Constraint.from_json(con.to_json()) == con


def test_specialize_binomial():
    spec = specialize(reduce_generic(WEIGHTED), "binom(n,k)")
    assert spec.constants == {"c": n / 4}
    b = Binding({"n": Fraction(6), "a": Fraction(4)})
    assert eval_expr(spec.lhs, b) == eval_expr(spec.rhs, b)
    assert check_identity(spec.lhs, spec.rhs, {"a": range(8), "n": range(1, 8)}).passed


def test_specialize_harmonic():
    spec = specialize(reduce_generic(WEIGHTED), "harmonic(k)")
    assert spec.constants == {"c": RatFunc.const(0)}
    assert check_identity(spec.lhs, spec.rhs, {"a": range(10)}).passed


def test_specialize_squared_binomial_records_proviso():
    spec = specialize(reduce_generic(WEIGHTED), "binom(n,k)^2")
    assert spec.constants == {"c": n / 4}
    assert "n!=0" in spec.provisos
    back = SpecializedIdentity.from_json(json.loads(json.dumps(spec.to_json())))
    assert back.constants == spec.constants and back.provisos == spec.provisos


def test_specialize_square_family():
    spec = specialize(reduce_generic(SQUARE), "binom(n,k)")
    assert spec.constants == {"c": 1 - n / 2}
    b = Binding({"n": Fraction(5)})
    for i in range(6):
        bi = b.with_values(k=i)
        assert eval_expr(spec.solutions["Y"], bi) == eval_expr(parse("(n-k)*binom(n,k)"), bi)


def test_specialize_failure_is_reported():
    with pytest.raises(SpecializationFailure):
        specialize(reduce_generic(ALT), "(-1)^k*binom(n,k)")


def test_interchange_identity():
    lhs = parse("Sum(k,0,a,X[k]*Sum(j,0,k,Y[j]))")
    e = interchange(lhs)
    b = Binding({"a": Fraction(2)}, {"X": [Fraction(v) for v in (1, 2, 3)], "Y": [Fraction(1)] * 3})
    assert eval_expr(e, b) == eval_expr(lhs, b) == 14


def test_post_simplify_examples():
    e = post_simplify(normalize(parse("Sum(i,0,a,2*X[i] + i*X[i])")))
    assert print_expr(e) == "2*Sum(i,0,a,X[i]) + Sum(i,0,a,i*X[i])"
    e = post_simplify(normalize(parse("c*Sum(i,0,a,X[i])^2 + Y[a]*Sum(i,0,a,X[i])"
                                      " + Sum(i,0,a,-c*X[i]^2 + i*X[i]^2 - X[i]*Y[i])")))
    assert len(e.terms) == 5
    assert same(e, "c*Sum(i,0,a,X[i])^2 - c*Sum(i,0,a,X[i]^2) - Sum(i,0,a,X[i]*Y[i])"
                   " + Sum(i,0,a,X[i])*Y[a] + Sum(i,0,a,i*X[i]^2)")
    e = post_simplify(normalize(parse("Sum(l,0,k,X[l]^2) - Sum(l,0,k-1,X[l]^2)")))
    assert same(e, "X[k]^2")
