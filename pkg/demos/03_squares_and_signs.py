"""Squares of running sums, with and without an alternating sign.

Each generic reduction is specialized to several concrete families.  Some
families have no admissible constant, which shows up as a failure report
naming the constraint that could not be solved.
"""

from telesum import SpecializationFailure, check_identity, print_expr, reduce_generic, specialize

FAMILIES = ["binom(n,k)", "x^k*binom(n,k)", "(-1)^k*binom(n,k)", "1/binom(n,k)"]

for title, text in [("squares", "Sum(k,0,a,Sum(j,0,k,X[j])^2)"),
                    ("alternating squares", "Sum(k,0,a,(-1)^k*Sum(j,0,k,X[j])^2)")]:
    result = reduce_generic(text)
    print(f"== {title}")
    print(print_expr(result.closed_form))
    print(result.constraints[0].format())
    for atom in FAMILIES:
        try:
            s = specialize(result, atom)
        except SpecializationFailure as exc:
            print(f"  {atom:20s} no admissible constant ({exc.constraint.format()})")
            continue
        # inverse binomials only make sense below the diagonal
        provisos = s.provisos + (("a<=n",) if "/binom" in atom else ())
        report = check_identity(s.lhs, s.rhs, {"a": range(11), "n": range(1, 11)}, provisos=provisos)
        consts = ", ".join(f"{k} = {v}" for k, v in s.constants.items())
        print(f"  {atom:20s} {consts:28s} {report.summary()}")
    print()
