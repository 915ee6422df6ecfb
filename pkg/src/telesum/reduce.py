"""Reduction of generic double sums to single nested sums.

The summand of ``Sum(k, L, U, f)`` is read as a polynomial in one inner sum
S(k) = Σ_{j<=k} h(j) with coefficients in Q(params)[k, (-1)^k, X_{k+l}, ...].
The telescoping equation G(k+1) - G(k) = f(k+1) is solved with the ansatz
G = Σ_m G_m S^m by comparing coefficients of S from the top down.  A level
that cannot be solved inside the coefficient ring gets a fresh generic Y
together with a first-order constraint on it (levels m >= 1), or the trivial
sum solution (level 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .algebra import ONE, ZERO, RatFunc, solve_linear_system, to_fraction
from .errors import TelesumError, UnsupportedError
from .expr import (
    Const,
    Expr,
    GenericAtom,
    Hyper,
    Sum,
    Var,
    _hyper_terms,
    _split_const,
    _sum_terms,
    _t_add,
    _t_atom,
    _t_const,
    _t_mul,
    _t_pow,
    _t_scale,
    _t_subst,
    _terms_free,
    as_ratfunc,
    free_vars,
    from_json,
    from_terms,
    generic_symbols,
    normalize,
    parse,
    print_expr,
    subs_params,
    substitute,
    substitute_var,
    terms_of,
    to_json,
)
from .telescope import TeleProblem, param_telescope, telescope_pieces

__all__ = [
    "Constraint",
    "ReductionResult",
    "SpecializedIdentity",
    "SpecializationFailure",
    "interchange",
    "reduce_generic",
    "specialize",
    "post_simplify",
]

_K, _ALT, _S = "_k", "_alt", "_S"


@dataclass(frozen=True)
class Constraint:
    """Y[v+1] - Y[v] = rhs(v), with free parameters ``params``."""

    symbol: str
    rhs: Expr
    var: str = "a"
    params: tuple[str, ...] = ()

    def lhs(self) -> Expr:
        return normalize(GenericAtom(self.symbol, self.var, 1) - GenericAtom(self.symbol, self.var, 0))

    def format(self, fmt: str = "plain") -> str:
        y1 = print_expr(GenericAtom(self.symbol, self.var, 1), fmt)
        y0 = print_expr(GenericAtom(self.symbol, self.var, 0), fmt)
        return f"{y1} - {y0} = {print_expr(self.rhs, fmt)}"

    def to_json(self) -> dict:
        return {"symbol": self.symbol, "var": self.var, "params": list(self.params), "rhs": to_json(self.rhs)}

    @classmethod
    def from_json(cls, data: Mapping) -> "Constraint":
        return cls(data["symbol"], from_json(data["rhs"]), data.get("var", "a"), tuple(data.get("params", ())))


@dataclass(frozen=True)
class ReductionResult:
    """``lhs`` equals ``closed_form`` whenever every constraint holds for v >= 0."""

    lhs: Expr
    closed_form: Expr
    constraints: tuple[Constraint, ...] = ()
    extensions: tuple[Expr, ...] = ()
    case: str = "solved-in-ring"
    var: str = "a"
    fixed: Mapping[str, RatFunc] = field(default_factory=dict)

    @property
    def params(self) -> tuple[str, ...]:
        seen: list[str] = []
        for c in self.constraints:
            seen.extend(p for p in c.params if p not in seen)
        return tuple(seen)

    def to_json(self) -> dict:
        return {
            "lhs": to_json(self.lhs),
            "closed_form": to_json(self.closed_form),
            "constraints": [c.to_json() for c in self.constraints],
            "extensions": [to_json(e) for e in self.extensions],
            "case": self.case,
            "var": self.var,
            "fixed": {k: str(v) for k, v in self.fixed.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ReductionResult":
        return cls(
            from_json(data["lhs"]),
            from_json(data["closed_form"]),
            tuple(Constraint.from_json(c) for c in data.get("constraints", ())),
            tuple(from_json(e) for e in data.get("extensions", ())),
            data.get("case", "solved-in-ring"),
            data.get("var", "a"),
            {k: as_ratfunc(parse(v)) for k, v in data.get("fixed", {}).items()},
        )


# ---------------------------------------------------------------------------
# the coefficient ring Q(params)[k, alt, X_{k+l}, ...][S]


def _gname(symbol: str, m: int) -> str:
    return f"{symbol}@{m}"


def _gparse(name: str) -> tuple[str, int] | None:
    if "@" not in name:
        return None
    symbol, m = name.rsplit("@", 1)
    return symbol, int(m)


def _is_ring_var(name: str) -> bool:
    return name in (_K, _ALT, _S) or "@" in name


def _alt_reduce(r: RatFunc) -> RatFunc:
    """Use alt^2 = 1."""
    if _ALT not in r.variables or r.degree(_ALT) < 2:
        return r
    coeffs = r.coefficients_in(_ALT)
    even = sum(coeffs[0::2], ZERO)
    odd = sum(coeffs[1::2], ZERO)
    return even + odd * RatFunc.var(_ALT)


def _shift_map(names: Iterable[str], m: int, beta: RatFunc | None = None) -> dict:
    out = {}
    for name in names:
        if name == _K:
            out[name] = RatFunc.var(_K) + m
        elif name == _ALT and m % 2:
            out[name] = -RatFunc.var(_ALT)
        elif name == _S:
            if m != 1 or beta is None:
                raise ValueError("S can only be shifted forward by one")
            out[name] = RatFunc.var(_S) + beta
        else:
            g = _gparse(name)
            if g is not None and m:
                out[name] = RatFunc.var(_gname(g[0], g[1] + m))
    return out


def _sigma(r: RatFunc, m: int = 1, beta: RatFunc | None = None) -> RatFunc:
    if m == 0 or r.is_const():
        return r
    return _alt_reduce(r.subs(_shift_map(r.variables, m, beta)))


def _to_ring(terms, var: str, s_atom: Expr | None) -> RatFunc:
    out = ZERO
    for mono, coeff in terms.items():
        if var in coeff.variables:
            if var in RatFunc.from_poly(coeff.den).variables:
                raise UnsupportedError("coefficients must be polynomial in the summation index")
            coeff = coeff.rename(var, _K)
        term = coeff
        for atom, e in mono:
            if isinstance(atom, GenericAtom) and atom.var == var:
                f = RatFunc.var(_gname(atom.name, atom.offset))
            elif isinstance(atom, Hyper) and atom.kind == "altsign" and atom.args == (Var(var),):
                f = RatFunc.var(_ALT)
            elif s_atom is not None and atom == s_atom:
                f = RatFunc.var(_S)
            else:
                raise UnsupportedError(f"summand factor {print_expr(atom)} is outside the generic reduction scope")
            term = term * f**e
        out = out + term
    return _alt_reduce(out)


def _ring_terms(r: RatFunc, var: str, s_atom: Expr | None = None):
    """Normal-form terms of a ring element with _k read as ``var``."""
    den = RatFunc.from_poly(r.den)
    if any(_is_ring_var(v) for v in den.variables):
        raise TelesumError("ring element with a non-constant denominator")
    out: dict = {}
    syms = [str(s) for s in r.num.ring.symbols]
    for monom, coeff in r.num.iterterms():
        c = RatFunc.const(to_fraction(coeff)) / den
        term: dict = {}
        atoms = []
        for name, e in zip(syms, monom):
            if not e:
                continue
            if name == _K:
                c = c * RatFunc.var(var) ** e
            elif name == _ALT:
                atoms.append((_hyper_terms("altsign", (RatFunc.var(var),)), e))
            elif name == _S:
                atoms.append((_t_atom(s_atom), e))
            elif (g := _gparse(name)) is not None:
                atoms.append((_t_atom(GenericAtom(g[0], var, g[1])), e))
            else:
                c = c * RatFunc.var(name) ** e
        term = _t_const(c)
        for t, e in atoms:
            term = _t_mul(term, _t_pow(t, e))
        out = _t_add(out, term)
    return out


def _split_monomials(r: RatFunc):
    """Yield (generic part {name: e}, remaining coefficient RatFunc) per term."""
    den = RatFunc.from_poly(r.den)
    syms = [str(s) for s in r.num.ring.symbols]
    for monom, coeff in r.num.iterterms():
        gen = {}
        rest = RatFunc.const(to_fraction(coeff)) / den
        for name, e in zip(syms, monom):
            if not e:
                continue
            if "@" in name:
                gen[name] = e
            else:
                rest = rest * RatFunc.var(name) ** e
        yield gen, rest


def _monomial(gen: Mapping[str, int]) -> RatFunc:
    out = ONE
    for name, e in gen.items():
        out = out * RatFunc.var(name) ** e
    return out


def _coefficient_conditions(r: RatFunc) -> list[RatFunc]:
    """Coefficients of r with respect to every ring variable."""
    groups: dict[tuple, RatFunc] = {}
    den = RatFunc.from_poly(r.den)
    syms = [str(s) for s in r.num.ring.symbols]
    for monom, coeff in r.num.iterterms():
        key = tuple((n, e) for n, e in zip(syms, monom) if e and _is_ring_var(n))
        rest = RatFunc.const(to_fraction(coeff)) / den
        for n, e in zip(syms, monom):
            if e and not _is_ring_var(n):
                rest = rest * RatFunc.var(n) ** e
        groups[key] = groups.get(key, ZERO) + rest
    return [c for c in groups.values() if not c.is_zero()]


def _solve_pure(q: RatFunc) -> RatFunc:
    """g in Q(params)[k, alt] with σ(g) - g = q."""
    q = _alt_reduce(q)
    parts = q.coefficients_in(_ALT) if _ALT in q.variables else [q]
    g = ZERO
    for sign_power, part in enumerate(parts):
        if part.is_zero():
            continue
        if _K in RatFunc.from_poly(part.den).variables:
            raise UnsupportedError("coefficients must be polynomial in the summation index")
        ratio = ONE if sign_power == 0 else RatFunc.const(-1)
        sol = param_telescope(TeleProblem(ratio, (part,), _K))
        if sol is None:
            raise TelesumError("polynomial telescoping unexpectedly failed")
        g = g + sol.certificate * (RatFunc.var(_ALT) if sign_power else ONE)
    return g


def _solve_in_ring(q: RatFunc) -> tuple[RatFunc, list[RatFunc]]:
    """Candidate g with σ(g) - g = q and the conditions under which it is exact.

    Every generic monomial is moved to its base shift (smallest offset 0);
    the collapsed residual must vanish for a solution to exist.
    """
    pure = ZERO
    groups: dict[tuple, list] = {}
    for gen, rest in _split_monomials(q):
        if not gen:
            pure = pure + rest
            continue
        low = min(_gparse(n)[1] for n in gen)
        base = tuple(sorted((_gname(*_shift_pair(n, -low)), e) for n, e in gen.items()))
        groups.setdefault(base, []).append((low, rest))
    g = _solve_pure(pure) if not pure.is_zero() else ZERO
    conditions: list[RatFunc] = []
    for base, items in groups.items():
        m0 = _monomial(dict(base))
        residual = ZERO
        for m, p in items:
            w = _sigma(p, -m) * m0
            residual = residual + _sigma(p, -m)
            if m > 0:
                for i in range(m):
                    g = g + _sigma(w, i)
            elif m < 0:
                t = p * _sigma(m0, m)
                for i in range(-m):
                    g = g - _sigma(t, i)
        conditions.extend(_coefficient_conditions(_alt_reduce(residual)))
    return _alt_reduce(g), conditions


def _shift_pair(name: str, m: int) -> tuple[str, int]:
    symbol, off = _gparse(name)
    return symbol, off + m


def _solve_conditions(conditions: Sequence[RatFunc], unknowns: Sequence[str]) -> dict | None:
    """Substitution for pivot unknowns making all (affine) conditions vanish."""
    if not conditions:
        return {}
    live = [u for u in unknowns if any(u in c.variables for c in conditions)]
    zero = {u: 0 for u in live}
    matrix, rhs = [], []
    for c in conditions:
        base = c.subs(zero) if live else c
        row = []
        for u in live:
            point = dict(zero)
            point[u] = 1
            row.append(c.subs(point) - base)
        if c != base + sum((r * RatFunc.var(u) for r, u in zip(row, live)), ZERO):
            raise TelesumError("nonlinear condition on telescoping constants")
        matrix.append(row)
        rhs.append(-base)
    if not live:
        return None
    sol = solve_linear_system(matrix, rhs)
    if sol is None:
        return None
    free = {}
    for vec in sol.nullspace:
        f = next(i for i, v in enumerate(vec) if v == ONE and all(
            other is vec or other[i].is_zero() for other in sol.nullspace))
        free[f] = vec
    out = {}
    for i, u in enumerate(live):
        if i in free:
            continue
        value = sol.particular[i]
        for f, vec in free.items():
            if not vec[i].is_zero():
                value = value + vec[i] * RatFunc.var(live[f])
        out[u] = value
    return out


# ---------------------------------------------------------------------------
# reduce_generic


def _outer_sum(e: Expr) -> tuple[Sum, RatFunc]:
    t = terms_of(normalize(e))
    if len(t) != 1:
        raise UnsupportedError("expected a single outer sum Sum(k, L, U, summand)")
    ((mono, coeff),) = t.items()
    if len(mono) != 1 or mono[0][1] != 1 or not isinstance(mono[0][0], Sum):
        raise UnsupportedError("expected a single outer sum Sum(k, L, U, summand)")
    node = mono[0][0]
    if node.var in coeff.variables:
        raise UnsupportedError("outer coefficient depends on the summation index")
    return node, coeff


def _inner_sum(body_terms, var: str) -> Sum | None:
    found = None
    for mono in body_terms:
        for atom, _ in mono:
            if isinstance(atom, Sum) and var in free_vars(atom):
                if atom.upper != Var(var):
                    raise UnsupportedError("inner sums must run up to the outer summation index")
                if found is not None and atom != found:
                    raise UnsupportedError("the summand may involve only one inner sum")
                found = atom
    return found


def _fresh_names(base: str, avoid: set[str]) -> Iterable[str]:
    i = 0
    while True:
        name = base if i == 0 else f"{base}{i}"
        if name not in avoid:
            avoid.add(name)
            yield name
        i += 1


def _constraint_var(upper: RatFunc) -> str:
    vs = [v for v in upper.variables]
    return vs[0] if len(vs) == 1 else "k"


def reduce_generic(e: Expr | str, max_constraints: int = 1, *, simple: bool = True,
                   verify: bool = True, seed: int | None = None) -> ReductionResult:
    """Rewrite Σ_{k=L}^{U} P(k, X, S(k)) in terms of single nested sums.

    ``max_constraints`` bounds the number of fresh generic sequences; when
    more would be needed the input is returned unchanged with case
    ``"gave-up"``.  With ``verify`` the result is checked by the oracle on
    random tables before it is returned.
    """
    if isinstance(e, str):
        e = parse(e)
    lhs = normalize(e)
    node, outer_coeff = _outer_sum(lhs)
    v = node.var
    upper = as_ratfunc(node.upper)
    if upper is None:
        raise UnsupportedError("upper bound must be rational")
    body = terms_of(node.body)
    s_atom = _inner_sum(body, v)
    f = _to_ring(body, v, s_atom)
    beta = None
    if s_atom is not None:
        h = _to_ring(terms_of(s_atom.body), s_atom.var, None)
        beta = _sigma(h, 1)
        if any(n == _S for n in beta.variables):
            raise UnsupportedError("nested inner sums are not supported")

    degree = f.degree(_S) if _S in f.variables else 0
    if degree > 2:
        raise UnsupportedError("summands of degree > 2 in the inner sum are not supported")
    sf = _sigma(f, 1, beta)
    levels = sf.coefficients_in(_S) if _S in sf.variables else [sf]
    levels = levels + [ZERO] * (degree + 2 - len(levels))
    top = degree + 1 if s_atom is not None else 0

    avoid = set(free_vars(lhs)) | set(generic_symbols(lhs))
    y_names = _fresh_names("Y", set(avoid))
    unknowns: list[str] = []
    G: dict[int, RatFunc] = {}
    constraints: list[tuple[str, RatFunc]] = []
    trivial: RatFunc | None = None

    def substitute_all(sub: Mapping[str, RatFunc]):
        for i in G:
            G[i] = G[i].subs(sub)
        for j, (y, rhs) in enumerate(constraints):
            constraints[j] = (y, rhs.subs(sub))

    for m in range(top, -1, -1):
        rhs = levels[m] if m <= degree else ZERO
        for i in range(m + 1, top + 1):
            if not G[i].is_zero():
                rhs = rhs - _sigma(G[i], 1) * beta ** (i - m) * comb(i, m)
        rhs = _alt_reduce(rhs)
        g, conditions = _solve_in_ring(rhs)
        sub = _solve_conditions(conditions, unknowns)
        if sub is not None:
            if sub:
                substitute_all(sub)
                g = g.subs(sub)
            d = f"_d{m}"
            unknowns.append(d)
            G[m] = g + RatFunc.var(d)
        elif m >= 1:
            if len(constraints) >= max_constraints:
                return ReductionResult(lhs, lhs, case="gave-up", var=_constraint_var(upper))
            y = next(y_names)
            constraints.append((y, rhs))
            G[m] = RatFunc.var(_gname(y, 0))
        else:
            trivial = rhs
            G[0] = ZERO

    # Constants surviving in a constraint become parameters; the rest are 0.
    used = [u for u in unknowns if any(u in rhs.variables for _, rhs in constraints)]
    param_names = _fresh_names("c", set(avoid))
    rename = {u: RatFunc.var(next(param_names)) for u in used}
    fixed = {u: ZERO for u in unknowns if u not in rename}
    final = {**rename, **fixed}
    for i in G:
        G[i] = G[i].subs(final)
    constraints = [(y, rhs.subs(final)) for y, rhs in constraints]
    if trivial is not None:
        trivial = trivial.subs(final)

    # G as normal-form terms in v.
    gterms: dict = {}
    for m, gm in G.items():
        gm_s = gm * RatFunc.var(_S) ** m if m else gm
        gterms = _t_add(gterms, _ring_terms(gm_s, v, s_atom))
    extensions = []
    if trivial is not None and not trivial.is_zero():
        t = _fresh(_terms_free(gterms) | {v})
        inner = _t_subst(_ring_terms(trivial, v), v, RatFunc.var(t) - 1)
        ext = _sum_terms(t, 0, RatFunc.var(v), inner)
        gterms = _t_add(gterms, ext)
        extensions.append(ext)

    at_upper = _t_subst(gterms, v, upper)
    at_lower = _t_subst(gterms, v, RatFunc.const(node.lower - 1))
    closed = _t_scale(_t_add(at_upper, at_lower, RatFunc.const(-1)), outer_coeff)
    closed_expr = _drop_negative(from_terms(closed))
    if simple:
        closed_expr = post_simplify(closed_expr)

    cvar = _constraint_var(upper)
    cons = tuple(
        Constraint(y, from_terms(_ring_terms(rhs, cvar)), cvar,
                   tuple(str(p) for p in rename.values() if str(p) in rhs.variables))
        for y, rhs in constraints)
    ext_exprs = tuple(from_terms(_t_subst(x, v, upper)) for x in extensions)
    if cons:
        case = "solved-with-constraints"
    elif ext_exprs:
        case = "solved-with-extension"
    else:
        case = "solved-in-ring"
    result = ReductionResult(lhs, closed_expr, cons, ext_exprs, case, cvar,
                             {k.lstrip("_"): v for k, v in fixed.items()})
    if verify:
        from .oracle import check_reduction

        report = check_reduction(result, seed=seed)
        if not report.passed:
            raise TelesumError(f"reduction failed oracle verification: {report.summary()}")
    return result


def _fresh(avoid) -> str:
    for name in ("t", "u", "w", "z"):
        if name not in avoid:
            return name
    i = 1
    while f"t{i}" in avoid:
        i += 1
    return f"t{i}"


def _drop_negative(e: Expr) -> Expr:
    t = terms_of(e)
    out = {m: c for m, c in t.items()
           if not any(isinstance(a, GenericAtom) and a.var is None and a.offset < 0 for a, _ in m)}
    return from_terms(out) if len(out) != len(t) else e


# ---------------------------------------------------------------------------
# interchange


def interchange(e: Expr | str) -> Expr:
    """Σ_{k=0}^a (Σ_{j=0}^k x_j) y_k as a square-grid rearrangement.

    Returns (Σ y)(Σ x) + Σ x_k y_k - Σ_k x_k Σ_{j<=k} y_j, normalized.
    """
    if isinstance(e, str):
        e = parse(e)
    node, coeff = _outer_sum(e)
    v = node.var
    body = terms_of(node.body)
    if len(body) != 1:
        raise UnsupportedError("interchange expects a single product (Σ x)·y as summand")
    ((mono, c),) = body.items()
    inner = [a for a, ex in mono if isinstance(a, Sum) and v in free_vars(a)]
    if len(inner) != 1 or dict(mono)[inner[0]] != 1:
        raise UnsupportedError("interchange expects exactly one inner sum in the summand")
    s = inner[0]
    if s.upper != Var(v) or s.lower != 0 or node.lower != 0:
        raise UnsupportedError("interchange expects Σ_{k=0}^a (Σ_{j=0}^k x_j) y_k")
    y_terms = {tuple((a, ex) for a, ex in mono if a != s): c}
    y = from_terms(y_terms)
    x = substitute_var(s.body, s.var, Var(v))
    a = node.upper
    j = "_j"
    y_j = substitute_var(y, v, Var(j))
    out = (Sum(v, 0, a, y) * Sum(v, 0, a, x) + Sum(v, 0, a, x * y)
           - Sum(v, 0, a, x * Sum(j, 0, Var(v), y_j)))
    return normalize(from_terms(_t_scale(terms_of(out), coeff)))


# ---------------------------------------------------------------------------
# post_simplify


def post_simplify(e: Expr) -> Expr:
    """Split sums over sums of terms, pull out factors free of the summation
    index, close polynomial sums, and bring upper bounds u+m back to u.

    Also rewrites binom(., v+m), harmonic(v+m) and factorial(v+m) with m > 0
    through their base atom at v; those rewrites hold for v >= 0.
    """
    return from_terms(_simplify_terms(terms_of(e)))


def _simplify_terms(t) -> dict:
    out: dict = {}
    for mono, coeff in t.items():
        acc = _t_const(coeff)
        for atom, e in mono:
            acc = _t_mul(acc, _t_pow(_simplify_atom(atom), e))
            if not acc:
                break
        out = _t_add(out, acc)
    return out


def _simplify_atom(atom: Expr) -> dict:
    if isinstance(atom, GenericAtom):
        if atom.var is None and atom.offset < 0:
            return {}
        return _t_atom(atom)
    if isinstance(atom, Hyper):
        return _shift_down(atom)
    if isinstance(atom, Sum):
        return _simplify_sum(atom)
    return _t_atom(atom)


def _running(arg: Expr) -> tuple[str, int] | None:
    """(v, m) when ``arg`` is v + m for a variable v and an integer m > 0."""
    r = as_ratfunc(arg)
    rest, c = _split_const(r)
    if c.denominator != 1 or c <= 0:
        return None
    vs = rest.variables
    if len(vs) != 1 or rest != RatFunc.var(vs[0]):
        return None
    return vs[0], int(c)


def _shift_down(atom: Hyper) -> dict:
    kind = atom.kind
    if kind not in ("binom", "harmonic", "factorial"):
        return _t_atom(atom)
    run = _running(atom.args[-1])
    if run is None:
        return _t_atom(atom)
    v, m = run
    x = RatFunc.var(v)
    if kind == "binom":
        top = as_ratfunc(atom.args[0])
        factor = ONE
        for t in range(m):
            factor = factor * (top - x - t) / (x + t + 1)
        return _t_scale(_hyper_terms("binom", (top, x)), factor)
    if kind == "factorial":
        factor = ONE
        for t in range(1, m + 1):
            factor = factor * (x + t)
        return _t_scale(_hyper_terms("factorial", (x,)), factor)
    extra = sum((1 / (x + t) for t in range(1, m + 1)), ZERO)
    return _t_add(_hyper_terms("harmonic", (x,)), _t_const(extra))


def _power_sum(r: int, lower: int, upper: RatFunc) -> RatFunc:
    """Σ_{i=lower}^{upper} i^r as a polynomial in the bound."""
    sol = param_telescope(TeleProblem(ONE, (RatFunc.var("_f") ** r,), "_f"))
    R = sol.certificate
    return R.subs({"_f": upper + 1}) - R.subs({"_f": lower}) if "_f" in R.variables else ZERO


def _simplify_sum(s: Sum) -> dict:
    v = s.var
    upper = as_ratfunc(s.upper)
    body = _simplify_terms(terms_of(s.body))
    out: dict = {}
    rest, m = _split_const(upper)
    if not rest.is_zero() and m.denominator == 1 and m != 0 and (m > 0 or s.lower == 0):
        m = int(m)
        upper = rest
        if m > 0:
            for t in range(1, m + 1):
                out = _t_add(out, _simplify_terms(_t_subst(body, v, rest + t)))
        else:
            for t in range(-m):
                out = _t_add(out, _simplify_terms(_t_subst(body, v, rest - t)), RatFunc.const(-1))
    for mono, coeff in body.items():
        dep = tuple((a, e) for a, e in mono if v in free_vars(a))
        indep = tuple((a, e) for a, e in mono if v not in free_vars(a))
        outside = {indep: ONE}
        if v in coeff.variables and v in RatFunc.from_poly(coeff.den).variables:
            pieces = [(coeff, None)]
        elif v in coeff.variables:
            pieces = [(c, r) for r, c in enumerate(coeff.coefficients_in(v)) if not c.is_zero()]
        else:
            pieces = [(coeff, 0)]
        for c, r in pieces:
            if r is None:
                inner = _sum_terms(v, s.lower, upper, {dep: c})
                term = inner
            elif not dep:
                term = _t_const(c * _power_sum(r, s.lower, upper))
            else:
                xr = RatFunc.var(v) ** r
                term = _t_scale(_sum_terms(v, s.lower, upper, {dep: xr}), c)
            out = _t_add(out, _t_mul(term, outside))
    return out


# ---------------------------------------------------------------------------
# specialization


@dataclass(frozen=True)
class SpecializedIdentity:
    lhs: Expr
    rhs: Expr
    constants: Mapping[str, RatFunc]
    solutions: Mapping[str, Expr]
    provisos: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "lhs": to_json(self.lhs),
            "rhs": to_json(self.rhs),
            "constants": {k: str(v) for k, v in self.constants.items()},
            "solutions": {k: to_json(v) for k, v in self.solutions.items()},
            "provisos": list(self.provisos),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SpecializedIdentity":
        return cls(from_json(data["lhs"]), from_json(data["rhs"]),
                   {k: as_ratfunc(parse(v)) for k, v in data.get("constants", {}).items()},
                   {k: from_json(v) for k, v in data.get("solutions", {}).items()},
                   tuple(data.get("provisos", ())))


class SpecializationFailure(TelesumError):
    """A constraint has no solution of the supported shape for the chosen atom."""

    def __init__(self, constraint: Constraint, message: str):
        super().__init__(message)
        self.constraint = constraint


def _linear_pieces(e: Expr, params: Sequence[str]) -> list[Expr]:
    zero = {p: ZERO for p in params}
    base = subs_params(e, zero)
    pieces = [base]
    for p in params:
        point = dict(zero)
        point[p] = ONE
        pieces.append(normalize(subs_params(e, point) - base))
    check = base
    for p, piece in zip(params, pieces[1:]):
        check = check + Var(p) * piece
    if normalize(check - e) != Const(0):
        raise UnsupportedError("constraint is not linear in its parameters")
    return pieces


def _provisos(values: Iterable[RatFunc], index: str) -> tuple[str, ...]:
    out = []
    for f in values:
        den = RatFunc.from_poly(f.den)
        if den.is_const() or index in den.variables:
            continue
        text = f"{den}!=0"
        if text not in out:
            out.append(text)
    return tuple(out)


def _coefficients(e: Expr) -> list[RatFunc]:
    out = []
    for mono, c in terms_of(e).items():
        out.append(c)
        for a, _ in mono:
            if isinstance(a, Sum):
                out.extend(_coefficients(a.body))
    return out


def specialize(result: ReductionResult, atom: Expr | str, symbol: str = "X", index: str = "k", *,
               simple: bool = True, verify: bool = True, seed: int | None = None) -> SpecializedIdentity:
    """Replace ``symbol`` by ``atom`` (an expression in ``index``) and solve the constraints."""
    if isinstance(atom, str):
        atom = parse(atom)
    if result.case == "gave-up":
        raise UnsupportedError("cannot specialize a reduction that gave up")
    constants: dict[str, RatFunc] = {}
    solutions: dict[str, Expr] = {}

    def concrete(e: Expr) -> Expr:
        e = substitute(e, symbol, atom, index)
        for y, sol in solutions.items():
            e = substitute(e, y, sol, index)
        return subs_params(e, constants) if constants else normalize(e)

    for con in result.constraints:
        rhs = concrete(con.rhs)
        rhs = normalize(substitute_var(rhs, con.var, Var(index))) if con.var != index else rhs
        params = [p for p in con.params if p not in constants]
        pieces = _linear_pieces(rhs, params)
        sol = telescope_pieces(pieces, index)
        if sol is None:
            raise SpecializationFailure(con, f"constraint on {con.symbol} has no solution for this atom")
        constants.update(zip(params, sol.constants))
        solutions[con.symbol] = post_simplify(sol.g) if simple else sol.g
    for p in result.params:
        constants.setdefault(p, ZERO)
    lhs = concrete(result.lhs)
    rhs = concrete(result.closed_form)
    if simple:
        rhs = post_simplify(rhs)
    provisos = _provisos(list(constants.values()) + [c for s in solutions.values() for c in _coefficients(s)],
                         index)
    ident = SpecializedIdentity(lhs, rhs, constants, solutions, provisos)
    if verify:
        from .oracle import check_identity

        report = check_identity(lhs, rhs, provisos=provisos, seed=seed)
        if not report.passed:
            raise TelesumError(f"specialized identity failed oracle verification: {report.summary()}")
    return ident
