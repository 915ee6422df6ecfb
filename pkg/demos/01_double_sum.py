"""Collapse a generic double sum and confirm the result on random data.

Run with ``python3 demos/01_double_sum.py``.
"""

from fractions import Fraction

from telesum import Binding, check_identity, eval_expr, parse, print_expr, reduce_generic

double = parse("Sum(k,0,a,Sum(j,0,k,X[j]))")
result = reduce_generic(double)
print("input   :", print_expr(double))
print("reduced :", print_expr(result.closed_form))
print("latex   :", print_expr(result.closed_form, "latex"))

# X = 0, 1, 2, 3 and a = 3: both sides are 0 + 1 + 3 + 6
b = Binding({"a": Fraction(3)}, {"X": [Fraction(v) for v in range(4)]})
print("at a=3  :", eval_expr(double, b), "=", eval_expr(result.closed_form, b))

# the identity holds for every sequence, so random rational tables are a fair test
report = check_identity(double, result.closed_form, {"a": range(21)}, trials=10)
print("oracle  :", report.summary())

# plugging in binomials gives the first of the classical sums
first = parse("Sum(k,0,n,Sum(j,0,k,binom(n,j)))")
for nv in range(6):
    value = eval_expr(first, Binding({"n": Fraction(nv)}))
    print(f"  n={nv}: {value} vs 2^(n-1)(n+2) = {Fraction(2) ** (nv - 1) * (nv + 2)}")
