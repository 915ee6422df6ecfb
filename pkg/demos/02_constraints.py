"""When no unconditional rewrite exists, a fresh sequence Y and a constant c appear.

The weighted sum below reduces only under a first-order constraint on Y.
Specializing X picks out the admissible (c, Y) by parameterized telescoping.
"""

from fractions import Fraction

from telesum import Binding, check_constraint, check_identity, parse, print_expr, reduce_generic, specialize
from telesum.expr import free_vars

weighted = "Sum(k,0,a,k*X[k]*Sum(j,0,k,X[j]))"
result = reduce_generic(weighted)
(constraint,) = result.constraints
print("closed form:", print_expr(result.closed_form))
print("constraint :", constraint.format())
print()

for text in ["binom(n,k)", "harmonic(k)", "binom(n,k)^2"]:
    atom = parse(text)
    s = specialize(result, atom)
    print(f"X[k] = {text}")
    print("  constants:", {name: str(v) for name, v in s.constants.items()})
    print("  Y[k]     :", print_expr(s.solutions["Y"]))
    if s.provisos:
        print("  provided :", ", ".join(s.provisos))

    has_n = "n" in free_vars(atom)
    binding = Binding({"n": Fraction(7)}) if has_n else None
    report = check_constraint(constraint, binding, solutions={"X": atom, **s.solutions}, constants=s.constants)
    print("  recurrence:", report.summary())
    ranges = {"a": range(13), "n": range(1, 13)} if has_n else {"a": range(13)}
    print("  identity  :", check_identity(s.lhs, s.rhs, ranges, provisos=s.provisos).summary())
    print()
