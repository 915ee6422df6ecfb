"""Brute-force exact evaluation and identity checking.

Everything is evaluated bottom-up with :class:`fractions.Fraction`.  Empty
sums are 0, generic sequences vanish at negative indices, and rational
coefficients evaluate to 0 at their poles.  Atoms that are genuinely
undefined at a point (1/binom(n,k) with binom(n,k) = 0, factorials of
negative integers, 0 to a negative power) raise :class:`PoleError`; checks
count such points as skipped.
"""

from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from .algebra import RatFunc
from .errors import PoleError, TelesumError
from .expr import (
    Add,
    Const,
    Expr,
    GenericAtom,
    Hyper,
    Mul,
    Pow,
    RatCoeff,
    Sum,
    Var,
    free_vars,
    generic_symbols,
    normalize,
    parse,
    subs_params,
    substitute,
    walk,
)

__all__ = [
    "DEFAULT_SEED",
    "OracleError",
    "Binding",
    "CheckReport",
    "default_seed",
    "random_rational",
    "random_table",
    "eval_expr",
    "eval_sequence",
    "check_identity",
    "check_constraint",
    "check_reduction",
    "falsify_nonexistence",
    "parse_proviso",
]

DEFAULT_SEED = 20181
GRID_VARS = ("a", "n")


class OracleError(TelesumError):
    pass


def default_seed() -> int:
    env = os.environ.get("TELESUM_SEED")
    return int(env) if env else DEFAULT_SEED


def random_rational(rng: random.Random, bound: int = 9) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_table(rng: random.Random, length: int, bound: int = 9) -> list[Fraction]:
    return [random_rational(rng, bound) for _ in range(length)]


@dataclass
class Binding:
    """Values for free variables and tables for generic sequences (indexed from 0)."""

    values: dict[str, Fraction] = field(default_factory=dict)
    tables: dict[str, list[Fraction]] = field(default_factory=dict)

    def with_values(self, **values) -> "Binding":
        merged = dict(self.values)
        merged.update({k: Fraction(v) for k, v in values.items()})
        return Binding(merged, self.tables)

    def to_json(self) -> dict:
        return {
            "values": {k: str(v) for k, v in self.values.items()},
            "tables": {k: [str(x) for x in t] for k, t in self.tables.items()},
        }


@dataclass
class CheckReport:
    status: str
    points: int = 0
    skipped: int = 0
    witness: dict | None = None
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    seed: int | None = None
    grid: dict | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def summary(self) -> str:
        if self.status == "fail":
            where = ", ".join(f"{k}={v}" for k, v in (self.witness or {}).items())
            return f"fail at {where}: lhs={self.lhs} rhs={self.rhs} (seed {self.seed})"
        extra = f", {self.skipped} skipped" if self.skipped else ""
        return f"{self.status}: {self.points} points{extra} (seed {self.seed})"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "points": self.points,
            "skipped": self.skipped,
            "witness": {k: str(v) for k, v in self.witness.items()} if self.witness else None,
            "lhs": None if self.lhs is None else str(self.lhs),
            "rhs": None if self.rhs is None else str(self.rhs),
            "seed": self.seed,
            "grid": self.grid,
        }


# ---------------------------------------------------------------------------
# evaluation


def _as_int(x: Fraction, what: str) -> int:
    if x.denominator != 1:
        raise OracleError(f"{what} must be an integer, got {x}")
    return x.numerator


def _binom(top: Fraction, bottom: int) -> Fraction:
    if bottom < 0:
        return Fraction(0)
    out = Fraction(1)
    for t in range(bottom):
        out = out * (top - t) / (t + 1)
    return out


def _hyper(kind: str, args: list[Fraction]) -> Fraction:
    if kind == "binom":
        return _binom(args[0], _as_int(args[1], "binom lower argument"))
    if kind == "invbinom":
        b = _binom(args[0], _as_int(args[1], "binom lower argument"))
        if b == 0:
            raise PoleError("1/binom at a zero of binom")
        return 1 / b
    if kind == "pow":
        base, e = args[0], _as_int(args[1], "exponent")
        if base == 0 and e < 0:
            raise PoleError("0 to a negative power")
        return base**e
    if kind == "altsign":
        return Fraction(-1 if _as_int(args[0], "sign exponent") % 2 else 1)
    if kind == "harmonic":
        n = _as_int(args[0], "harmonic argument")
        return sum((Fraction(1, i) for i in range(1, n + 1)), Fraction(0))
    if kind == "factorial":
        n = _as_int(args[0], "factorial argument")
        if n < 0:
            raise PoleError("factorial of a negative integer")
        out = 1
        for i in range(2, n + 1):
            out *= i
        return Fraction(out)
    raise OracleError(f"unknown atom {kind}")


def eval_expr(e: Expr, binding: Binding, env: Mapping[str, Fraction] | None = None) -> Fraction:
    """Exact value of ``e``; ``env`` binds summation indices and overrides ``binding``."""
    env = env or {}
    return _eval(e, binding, env)


def _lookup(name: str, binding: Binding, env: Mapping[str, Fraction]) -> Fraction:
    if name in env:
        return env[name]
    if name in binding.values:
        return binding.values[name]
    raise OracleError(f"unbound variable {name!r}")


def _eval(e: Expr, b: Binding, env) -> Fraction:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return _lookup(e.name, b, env)
    if isinstance(e, RatCoeff):
        point = {v: _lookup(v, b, env) for v in e.value.variables}
        return e.value.evaluate(point)
    if isinstance(e, GenericAtom):
        idx = e.offset if e.var is None else _as_int(_lookup(e.var, b, env), "index") + e.offset
        if idx < 0:
            return Fraction(0)
        table = b.tables.get(e.name)
        if table is None:
            raise OracleError(f"no table for generic sequence {e.name!r}")
        if idx >= len(table):
            raise OracleError(f"table for {e.name!r} too short: index {idx}, length {len(table)}")
        return table[idx]
    if isinstance(e, Hyper):
        return _hyper(e.kind, [_eval(a, b, env) for a in e.args])
    if isinstance(e, Sum):
        upper = _as_int(_eval(e.upper, b, env), "sum bound")
        total = Fraction(0)
        inner = dict(env)
        for i in range(e.lower, upper + 1):
            inner[e.var] = Fraction(i)
            total += _eval(e.body, b, inner)
        return total
    if isinstance(e, Add):
        return sum((_eval(t, b, env) for t in e.terms), Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for f in e.factors:
            out *= _eval(f, b, env)
            if out == 0:
                # Remaining factors may still be undefined; evaluate them for pole detection.
                for g in e.factors:
                    _eval(g, b, env)
                return out
        return out
    if isinstance(e, Pow):
        return _eval(e.base, b, env) ** e.exp
    raise TypeError(type(e).__name__)


def eval_sequence(e: Expr, b: Binding, i: int, var: str = "k") -> Fraction:
    """Value of the sequence ``e`` (in ``var``) at index ``i``."""
    return eval_expr(e, b, {var: Fraction(i)})


# ---------------------------------------------------------------------------
# provisos and bindings


_PROVISO = re.compile(r"^(.*?)(<=|>=|!=|==|<|>)(.*)$")
_OPS = {
    "<=": lambda x, y: x <= y,
    ">=": lambda x, y: x >= y,
    "!=": lambda x, y: x != y,
    "==": lambda x, y: x == y,
    "<": lambda x, y: x < y,
    ">": lambda x, y: x > y,
}


def parse_proviso(text: str):
    """``"a<=n"`` to a predicate over a value map, plus the variables it mentions."""
    m = _PROVISO.match(text.replace(" ", ""))
    if not m:
        raise OracleError(f"cannot parse proviso {text!r}")
    left, op, right = parse(m.group(1)), m.group(2), parse(m.group(3))
    names = free_vars(left) | free_vars(right)

    def holds(values: Mapping[str, Fraction]) -> bool:
        b = Binding(dict(values))
        return _OPS[op](eval_expr(left, b), eval_expr(right, b))

    return holds, names


def _max_offset(exprs: Iterable[Expr]) -> int:
    best = 0
    for e in exprs:
        for node in walk(e):
            if isinstance(node, GenericAtom):
                best = max(best, node.offset)
    return best


def _random_params(names, rng, provisos, fixed) -> dict[str, Fraction]:
    preds = [parse_proviso(p) for p in provisos]
    for _ in range(100):
        values = {n: random_rational(rng) for n in names}
        merged = {**fixed, **values}
        if all(holds(merged) for holds, vs in preds if vs <= set(merged)):
            return values
    raise OracleError("could not draw parameters satisfying the provisos")


def check_identity(lhs: Expr, rhs: Expr, ranges: Mapping[str, Sequence[int]] | None = None,
                   binding: Binding | None = None, provisos: Sequence[str] = (), *,
                   constraint_solutions: Mapping[str, Expr] | None = None, index: str = "k",
                   grid: int = 12, seed: int | None = None, trials: int = 1) -> CheckReport:
    """Exact comparison of ``lhs`` and ``rhs`` on a grid.

    Free variables named in ``ranges`` are enumerated (by default ``a`` and
    ``n`` over 0..grid); any other free variable gets a random rational and
    every generic sequence a random table.  ``constraint_solutions`` maps
    generic symbols to expressions in ``index`` that replace them first.
    """
    seed = default_seed() if seed is None else seed
    rng = random.Random(seed)
    if constraint_solutions:
        for sym, sol in constraint_solutions.items():
            lhs = substitute(lhs, sym, sol, index)
            rhs = substitute(rhs, sym, sol, index)
    binding = binding or Binding()
    names = (free_vars(lhs) | free_vars(rhs)) - set(binding.values)
    if ranges is None:
        ranges = {v: range(grid + 1) for v in GRID_VARS if v in names}
    ranges = {v: list(r) for v, r in ranges.items()}
    others = sorted(names - set(ranges))
    preds = [parse_proviso(p) for p in provisos]
    symbols = (generic_symbols(lhs) | generic_symbols(rhs)) - set(binding.tables)
    span = max((max(r) for r in ranges.values() if r), default=0)
    length = span + _max_offset([lhs, rhs]) + 2 * grid + 4
    grid_info = {v: [min(r), max(r)] for v, r in ranges.items() if r}
    points = skipped = 0
    order = sorted(ranges)
    for _ in range(trials):
        tables = dict(binding.tables)
        for s in sorted(symbols):
            tables[s] = random_table(rng, length)
        params = _random_params(others, rng, [p for p in provisos], dict(binding.values))
        base = Binding({**binding.values, **params}, tables)
        for combo in product(*(ranges[v] for v in order)):
            values = {**base.values, **{v: Fraction(x) for v, x in zip(order, combo)}}
            if not all(holds(values) for holds, vs in preds if vs <= set(values)):
                continue
            b = Binding(values, tables)
            try:
                lv = eval_expr(lhs, b)
                rv = eval_expr(rhs, b)
            except PoleError:
                skipped += 1
                continue
            points += 1
            if lv != rv:
                witness = {v: values[v] for v in order}
                witness.update(params)
                return CheckReport("fail", points, skipped, witness, lv, rv, seed, grid_info)
    status = "pass" if points else "skipped"
    return CheckReport(status, points, skipped, None, None, None, seed, grid_info)


def check_constraint(constraint, binding: Binding | None = None, *, solutions: Mapping[str, Expr] | None = None,
                     constants: Mapping[str, Fraction | RatFunc] | None = None, upto: int = 20,
                     index: str = "k", seed: int | None = None) -> CheckReport:
    """Check Y[v+1] - Y[v] = rhs(v) pointwise for v = 0..upto.

    ``solutions`` replaces generic symbols (X, Y, ...) by expressions in
    ``index``; the remaining generic symbols must have tables in ``binding``.
    """
    seed = default_seed() if seed is None else seed
    binding = binding or Binding()
    eq = constraint.lhs() - constraint.rhs
    for sym, sol in (solutions or {}).items():
        eq = substitute(eq, sym, sol, index)
    if constants:
        eq = subs_params(eq, {k: RatFunc.coerce(v) for k, v in constants.items()})
    eq = normalize(eq)
    points = skipped = 0
    for v in range(upto + 1):
        b = binding.with_values(**{constraint.var: v})
        try:
            value = eval_expr(eq, b)
        except PoleError:
            skipped += 1
            continue
        points += 1
        if value != 0:
            lhs = eval_expr(normalize(substitute_all(constraint.lhs(), solutions, index)), b)
            return CheckReport("fail", points, skipped, {constraint.var: Fraction(v)}, lhs, lhs - value, seed,
                               {constraint.var: [0, upto]})
    return CheckReport("pass" if points else "skipped", points, skipped, seed=seed, grid={constraint.var: [0, upto]})


def substitute_all(e: Expr, solutions: Mapping[str, Expr] | None, index: str) -> Expr:
    for sym, sol in (solutions or {}).items():
        e = substitute(e, sym, sol, index)
    return e


def constraint_tables(constraints, binding: Binding, size: int, rng: random.Random) -> dict[str, list[Fraction]]:
    """Tables Y[0..size] solving each constraint from a random start value."""
    tables = dict(binding.tables)
    for con in constraints:
        y = [random_rational(rng)]
        for v in range(size):
            b = Binding({**binding.values, con.var: Fraction(v)}, {**tables, con.symbol: y + [Fraction(0)] * 2})
            y.append(y[-1] + eval_expr(con.rhs, b))
        tables[con.symbol] = y
    return tables


def check_reduction(result, size: int = 20, seed: int | None = None, trials: int = 1) -> CheckReport:
    """Soundness of a reduction on random tables (constraints solved numerically)."""
    seed = default_seed() if seed is None else seed
    rng = random.Random(seed)
    var = result.var
    lhs, rhs = result.lhs, result.closed_form
    ys = {c.symbol for c in result.constraints}
    exprs = [lhs, rhs] + [c.rhs for c in result.constraints]
    names = set().union(*(free_vars(e) for e in exprs)) - {var}
    symbols = set().union(*(generic_symbols(e) for e in exprs)) - ys
    length = size + _max_offset(exprs) + 4
    points = 0
    for _ in range(trials):
        values = {n: random_rational(rng) for n in sorted(names)}
        tables = {s: random_table(rng, length) for s in sorted(symbols)}
        base = Binding(values, tables)
        tables = constraint_tables(result.constraints, base, size + 2, rng)
        for a in range(size):
            b = Binding({**values, var: Fraction(a)}, tables)
            lv, rv = eval_expr(lhs, b), eval_expr(rhs, b)
            points += 1
            if lv != rv:
                return CheckReport("fail", points, 0, {var: Fraction(a), **values}, lv, rv, seed, {var: [0, size - 1]})
    return CheckReport("pass", points, 0, None, None, None, seed, {var: [0, size - 1]})


# ---------------------------------------------------------------------------
# nonexistence sweeps


def _rank_consistent(rows: list[list[Fraction]], rhs: list[Fraction]) -> bool:
    """Whether rows @ x = rhs has a solution (exact Gaussian elimination)."""
    m = [r[:] + [b] for r, b in zip(rows, rhs)]
    ncols = len(rows[0]) if rows else 0
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
    return all(row[-1] == 0 for row in m[r:])


def falsify_nonexistence(summand: Expr | str, cap: int = 8, *, var: str = "k", seed: int | None = None) -> CheckReport:
    """Search for a rational certificate refuting a "no telescoping solution" verdict.

    Parameters are fixed to random rationals.  The ansatz is
    g = Σ_μ Σ_d P_{μ,d}(k)/U(k) μ s^d over the Π/sign monomials μ of the
    summand and powers of its Σ-generator s, with deg P <= cap + deg U and a
    universal denominator U built from shifts (|j| <= cap) of every
    denominator and quotient factor.  Status "pass" means no refutation;
    "fail" means a certificate exists (the witness records the ansatz size).
    """
    from .diffring import PI, SIGMA, SIGN, from_expression

    seed = default_seed() if seed is None else seed
    rng = random.Random(seed)
    if isinstance(summand, str):
        summand = parse(summand)
    tower, f = from_expression(summand, var)
    pool: set[str] = set()
    for c in f.terms.values():
        pool.update(c.variables)
    for ext in tower.exts:
        if ext.alpha is not None:
            pool.update(ext.alpha.variables)
        if ext.beta is not None:
            for c in ext.beta.terms.values():
                pool.update(c.variables)
    params = sorted(pool - {var})
    point = {p: random_rational(rng) + 20 for p in params}

    def spec(r: RatFunc) -> RatFunc:
        return r.subs(point) if point else r

    sig = tower.sigma_gens()
    if len(sig) > 1:
        raise OracleError("at most one Σ-generator is supported by the sweep")
    s = sig[0] if sig else None
    beta_s = None
    if s is not None:
        beta = tower.exts[s].beta
        beta_s = beta.base_value()
        if beta_s is None:
            raise OracleError("the Σ-generator must have a rational summand")
        beta_s = spec(beta_s)
    ratios = {}
    coeffs: dict[tuple, RatFunc] = {}
    for exps, c in f.terms.items():
        mono = tuple(0 if (s is not None and i == s) else e for i, e in enumerate(exps))
        d = exps[s] if s is not None else 0
        coeffs[(mono, d)] = coeffs.get((mono, d), RatFunc.const(0)) + spec(c)
    monos = {m for m, _ in coeffs} | {tuple(0 for _ in tower.exts)}
    for mono in monos:
        r = RatFunc.const(1)
        for ext, e in zip(tower.exts, mono):
            if not e:
                continue
            if ext.kind == PI:
                r = r * spec(ext.alpha) ** e
            elif ext.kind == SIGN:
                r = r * (-1) ** e
        ratios[mono] = r
    dmax = max((d for _, d in coeffs), default=0) + (1 if s is not None else 0)

    factors: list[RatFunc] = []
    for r in list(ratios.values()) + list(coeffs.values()) + ([beta_s] if beta_s is not None else []):
        for poly in (r.num, r.den):
            if not poly:
                continue
            for fac, _ in poly.factor_list()[1]:
                p = RatFunc.from_poly(fac)
                if var in p.variables and p not in factors:
                    factors.append(p)
    U = RatFunc.const(1)
    for p in factors:
        for j in range(-cap, cap + 1):
            U = U * p.shift(var, j)
    deg = cap + (U.degree(var) if var in U.variables else 0)
    unknowns = [(mono, d, e) for mono in sorted(monos) for d in range(dmax + 1) for e in range(deg + 1)]
    col = {u: i for i, u in enumerate(unknowns)}
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    needed = len(unknowns) + deg + 2 * cap + 20
    kv = 0
    dens = [U] + list(ratios.values()) + list(coeffs.values()) + ([beta_s] if beta_s is not None else [])
    while len(rows) < needed * (dmax + 1):
        kv += 1
        x = Fraction(kv)
        if any(RatFunc.from_poly(r.den).evaluate({var: x}) == 0 for r in dens if var in r.variables) or \
                U.evaluate({var: x}) == 0 or U.evaluate({var: x + 1}) == 0:
            continue
        u0, u1 = U.evaluate({var: x}), U.evaluate({var: x + 1})
        b = beta_s.evaluate({var: x}) if beta_s is not None else Fraction(0)
        for mono in sorted(monos):
            r = ratios[mono].evaluate({var: x})
            for target in range(dmax + 1):
                row = [Fraction(0)] * len(unknowns)
                for d in range(target, dmax + 1):
                    binom_coeff = _binom(Fraction(d), d - target) * b ** (d - target)
                    for e in range(deg + 1):
                        row[col[(mono, d, e)]] += r * binom_coeff * (x + 1) ** e / u1
                for e in range(deg + 1):
                    row[col[(mono, target, e)]] -= x**e / u0
                c = coeffs.get((mono, target))
                rows.append(row)
                rhs.append(c.evaluate({var: x}) if c is not None else Fraction(0))
    grid = {"cap": cap, "unknowns": len(unknowns), "equations": len(rows)}
    if _rank_consistent(rows, rhs):
        return CheckReport("fail", len(rows), 0, {"certificate_degree": Fraction(deg)}, seed=seed, grid=grid)
    return CheckReport("pass", len(rows), 0, None, seed=seed, grid=grid)
