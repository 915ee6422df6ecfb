"""Some sums have no antidifference in their own tower.

The solver answers "no solution"; a brute-force sweep over rational
certificates of bounded degree confirms that nothing small was missed.
For k*k! both agree that a certificate exists (namely k!).
"""

import time

from telesum import falsify_nonexistence, parse, print_expr, telescope_pieces

for text in ["1/(k+1)", "binom(n,k)", "binom(n,k)^2", "harmonic(k)/(k+1)", "k*factorial(k)"]:
    t0 = time.perf_counter()
    solved = telescope_pieces([parse(text)])
    verdict = "no solution" if solved is None else f"g = {print_expr(solved.g)}"
    sweep = falsify_nonexistence(text, cap=8)
    refuted = "refuted" if sweep.status == "fail" else "not refuted"
    print(f"{text:20s} {verdict:28s} sweep: {refuted}  [{time.perf_counter() - t0:.1f}s]")
