"""Difference-ring towers over Q(params)(k).

A :class:`Tower` is an ordered tuple of extensions of the rational base field:
Π-generators (σ t = α t with α rational), the sign generator (σ m = -m,
m² = 1) and Σ-generators (σ s = s + β).  Elements are polynomials in the
Σ/sign generators and Laurent polynomials in the Π-generators with
rational-function coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping

from .algebra import ONE, ZERO, RatFunc
from .errors import UnsupportedError
from .expr import (
    Expr,
    GenericAtom,
    Hyper,
    Pow,
    Sum,
    Var,
    as_ratfunc,
    describe_atom,
    from_terms,
    normalize,
    terms_of,
)

__all__ = [
    "Extension",
    "Tower",
    "TowerElem",
    "apply_sigma",
    "apply_sigma_inv",
    "check_sigma_ext",
    "extend",
    "ev",
    "ev_symbolic",
    "from_expression",
    "to_expression",
    "Admissible",
    "Inadmissible",
]

SIGMA, PI, SIGN = "Sigma", "Pi", "R"


@dataclass(eq=False)
class Extension:
    """One generator of a tower.

    ``expr`` is the sequence the generator stands for, written in the tower's
    running variable; ``inverse_expr`` renders negative powers of Π-generators.
    """

    kind: str
    name: str
    expr: Expr
    alpha: RatFunc | None = None
    initial: RatFunc = ONE
    summand: "TowerElem | None" = None
    beta: "TowerElem | None" = None
    lower: int = 0
    inverse_expr: Expr | None = None
    threshold: int = 0

    def __repr__(self):
        return f"Extension({self.kind}, {self.name})"


@dataclass(frozen=True, eq=False)
class Tower:
    exts: tuple[Extension, ...] = ()
    var: str = "k"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return len(self.exts)

    def extends(self, other: "Tower") -> bool:
        return len(other.exts) <= len(self.exts) and all(a is b for a, b in zip(other.exts, self.exts)) \
            and self.var == other.var

    def index(self, name: str) -> int:
        for i, e in enumerate(self.exts):
            if e.name == name:
                return i
        raise KeyError(name)

    def gen(self, i: int) -> "TowerElem":
        mono = [0] * len(self.exts)
        mono[i] = 1
        return TowerElem(self, {tuple(mono): ONE})

    def const(self, c) -> "TowerElem":
        c = RatFunc.coerce(c)
        if c.is_zero():
            return TowerElem(self, {})
        return TowerElem(self, {(0,) * len(self.exts): c})

    def sigma_gens(self) -> list[int]:
        return [i for i, e in enumerate(self.exts) if e.kind == SIGMA]


class TowerElem:
    """Sparse polynomial over the tower generators."""

    __slots__ = ("tower", "terms")

    def __init__(self, tower: Tower, terms: Mapping[tuple[int, ...], RatFunc]):
        self.tower = tower
        self.terms = {m: c for m, c in terms.items() if not c.is_zero()}

    # structure --------------------------------------------------------
    def lift(self, tower: Tower) -> "TowerElem":
        if tower is self.tower:
            return self
        if not tower.extends(self.tower):
            raise ValueError("element does not belong to a sub-tower of the target")
        pad = (0,) * (len(tower) - len(self.tower))
        return TowerElem(tower, {m + pad: c for m, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def degree_in(self, i: int) -> int:
        return max((m[i] for m in self.terms), default=-1)

    def involves(self, i: int) -> bool:
        return any(m[i] for m in self.terms)

    def coeff_in(self, i: int, d: int) -> "TowerElem":
        """Coefficient of generator ``i`` to the power ``d``."""
        out = {}
        for m, c in self.terms.items():
            if m[i] == d:
                out[m[:i] + (0,) + m[i + 1:]] = c
        return TowerElem(self.tower, out)

    def map_coeffs(self, fn) -> "TowerElem":
        return TowerElem(self.tower, {m: fn(c) for m, c in self.terms.items()})

    def base_value(self) -> RatFunc | None:
        if not self.terms:
            return ZERO
        if set(self.terms) == {(0,) * len(self.tower)}:
            return next(iter(self.terms.values()))
        return None

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "TowerElem":
        if isinstance(other, TowerElem):
            if other.tower is self.tower:
                return other
            if self.tower.extends(other.tower):
                return other.lift(self.tower)
            raise ValueError("elements live in unrelated towers")
        return self.tower.const(other)

    def _align(self, other):
        other_e = other if isinstance(other, TowerElem) else None
        if other_e is not None and other_e.tower is not self.tower and other_e.tower.extends(self.tower):
            return self.lift(other_e.tower), other_e
        return self, self._coerce(other)

    def __add__(self, other):
        a, b = self._align(other)
        out = dict(a.terms)
        for m, c in b.terms.items():
            v = out.get(m, ZERO) + c
            if v.is_zero():
                out.pop(m, None)
            else:
                out[m] = v
        return TowerElem(a.tower, out)

    __radd__ = __add__

    def __neg__(self):
        return TowerElem(self.tower, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        a, b = self._align(other)
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (RatFunc, int, Fraction)):
            c = RatFunc.coerce(other)
            return TowerElem(self.tower, {m: v * c for m, v in self.terms.items()})
        a, b = self._align(other)
        exts = a.tower.exts
        out: dict = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = tuple(
                    (x + y) % 2 if exts[i].kind == SIGN else x + y for i, (x, y) in enumerate(zip(m1, m2))
                )
                v = out.get(m, ZERO) + c1 * c2
                if v.is_zero():
                    out.pop(m, None)
                else:
                    out[m] = v
        return TowerElem(a.tower, out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            if len(self.terms) == 1:
                (m, c), = self.terms.items()
                if all(x == 0 or self.tower.exts[i].kind in (PI, SIGN) for i, x in enumerate(m)):
                    inv = tuple(x % 2 if self.tower.exts[i].kind == SIGN else -x for i, x in enumerate(m))
                    return TowerElem(self.tower, {inv: 1 / c}) ** (-e)
            raise ValueError("only monomials over Π and sign generators are invertible")
        out = self.tower.const(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def __eq__(self, other):
        if not isinstance(other, TowerElem):
            try:
                other = self._coerce(other)
            except (TypeError, ValueError):
                return False
        a, b = self._align(other)
        return a.terms == b.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"TowerElem({to_expression(self, self.tower)})"


# ---------------------------------------------------------------------------
# the automorphism


def _sigma_gen_power(tower: Tower, i: int, e: int, inverse: bool) -> TowerElem:
    key = ("sigma_inv" if inverse else "sigma", i, e)
    cache = tower._cache
    if key in cache:
        return cache[key]
    ext = tower.exts[i]
    t = tower.gen(i)
    k = tower.var
    if ext.kind == PI:
        alpha = ext.alpha.shift(k, -1) if inverse else ext.alpha
        factor = alpha ** (-e) if inverse else alpha**e
        mono = [0] * len(tower)
        mono[i] = e
        out = TowerElem(tower, {tuple(mono): factor})
    elif ext.kind == SIGN:
        mono = [0] * len(tower)
        mono[i] = e % 2
        out = TowerElem(tower, {tuple(mono): RatFunc.const((-1) ** e)})
    else:
        step = ext.summand.lift(tower) if inverse else ext.beta.lift(tower)
        image = t - step if inverse else t + step
        out = image**e
    cache[key] = out
    return out


def _apply(e: TowerElem, tower: Tower, inverse: bool) -> TowerElem:
    e = e.lift(tower) if e.tower is not tower else e
    k = tower.var
    out = TowerElem(tower, {})
    for m, c in e.terms.items():
        term = tower.const(c.shift(k, -1 if inverse else 1))
        for i, x in enumerate(m):
            if x:
                term = term * _sigma_gen_power(tower, i, x, inverse)
        out = out + term
    return out


def apply_sigma(e: TowerElem, tower: Tower | None = None) -> TowerElem:
    """Image of ``e`` under the shift automorphism."""
    return _apply(e, tower or e.tower, inverse=False)


def apply_sigma_inv(e: TowerElem, tower: Tower | None = None) -> TowerElem:
    return _apply(e, tower or e.tower, inverse=True)


# ---------------------------------------------------------------------------
# evaluation


def _bind_key(bindings: Mapping) -> tuple:
    return tuple(sorted((k, Fraction(v)) for k, v in bindings.items()))


def _coeff_at(c: RatFunc, var: str, i: int, bindings: Mapping, symbolic: bool):
    if not symbolic:
        point = dict(bindings)
        point[var] = i
        return c.evaluate(point)
    values = {name: Fraction(v) for name, v in bindings.items()}
    values[var] = i
    try:
        return c.subs(values)
    except ZeroDivisionError:
        return ZERO


def _gen_value(tower: Tower, idx: int, i: int, bindings: Mapping, symbolic: bool):
    ext = tower.exts[idx]
    if ext.kind == SIGN:
        v = Fraction((-1) ** i)
        return RatFunc.const(v) if symbolic else v
    key = ("ev", idx, symbolic, _bind_key(bindings))
    table = tower._cache.setdefault(key, [])
    zero = ZERO if symbolic else Fraction(0)
    if ext.kind == PI:
        if not table:
            init = ext.initial.subs({n: Fraction(v) for n, v in bindings.items()}) if symbolic else \
                ext.initial.evaluate(bindings)
            table.append(init)
        while len(table) <= i:
            j = len(table) - 1
            table.append(table[-1] * _coeff_at(ext.alpha, tower.var, j, bindings, symbolic))
        return table[i]
    # Σ-generator: running sum from its lower bound
    while len(table) <= i:
        j = len(table)
        prev = table[-1] if table else zero
        if j >= ext.lower:
            prev = prev + _ev(ext.summand, ext.summand.tower, j, bindings, symbolic)
        table.append(prev)
    return table[i]


def _ev(e: TowerElem, tower: Tower, i: int, bindings: Mapping, symbolic: bool):
    if i < 0:
        raise ValueError("evaluation index must be nonnegative")
    total = ZERO if symbolic else Fraction(0)
    for m, c in e.terms.items():
        value = _coeff_at(c, tower.var, i, bindings, symbolic)
        if (value.is_zero() if symbolic else value == 0):
            continue
        for idx, x in enumerate(m):
            if x:
                g = _gen_value(tower, idx, i, bindings, symbolic)
                if x < 0:
                    if (g.is_zero() if symbolic else g == 0):
                        value = ZERO if symbolic else Fraction(0)
                        break
                    value = value / g ** (-x)
                else:
                    value = value * g**x
        total = total + value
    return total


def ev(e: TowerElem, tower: Tower | None, i: int, bindings: Mapping | None = None) -> Fraction:
    """Exact value of ``e`` at index ``i`` with every parameter bound."""
    tower = tower or e.tower
    e = e.lift(tower)
    return _ev(e, tower, i, dict(bindings or {}), symbolic=False)


def ev_symbolic(e: TowerElem, i: int, bindings: Mapping | None = None) -> RatFunc:
    """Value at index ``i`` as a rational function of the unbound parameters."""
    return _ev(e, e.tower, i, dict(bindings or {}), symbolic=True)


# ---------------------------------------------------------------------------
# building towers


@dataclass(frozen=True)
class Admissible:
    pass


@dataclass(frozen=True)
class Inadmissible:
    witness: TowerElem


def check_sigma_ext(beta: TowerElem, tower: Tower):
    """Decide whether σ(s) = s + β defines a Σ-extension of ``tower``.

    Admissible iff σ(g) - g = β has no solution g in the tower.
    """
    from .telescope import tower_telescope

    sol = tower_telescope([beta.lift(tower)], tower)
    if sol is None:
        return Admissible()
    return Inadmissible(sol.g)


def extend(tower: Tower, kind: str, *, name: str, expr: Expr, alpha: RatFunc | None = None,
           initial: RatFunc = ONE, summand: TowerElem | None = None, lower: int = 0,
           inverse_expr: Expr | None = None, check: bool = True) -> Tower:
    """Return a new tower with one more generator on top."""
    if kind == PI:
        if alpha is None or alpha.is_zero():
            raise UnsupportedError("Π-extension needs a nonzero rational α")
        ext = Extension(PI, name, expr, alpha=alpha, initial=initial, inverse_expr=inverse_expr,
                        threshold=_alpha_threshold(alpha, tower.var))
    elif kind == SIGN:
        ext = Extension(SIGN, name, expr, alpha=RatFunc.const(-1))
    elif kind == SIGMA:
        if summand is None:
            raise UnsupportedError("Σ-extension needs its summand")
        summand = summand.lift(tower)
        beta = apply_sigma(summand, tower)
        if check and isinstance(check_sigma_ext(beta, tower), Inadmissible):
            raise UnsupportedError(f"{name}: σ(t) = t + β is not a Σ-extension (β telescopes)")
        ext = Extension(SIGMA, name, expr, summand=summand, beta=beta, lower=lower)
    else:
        raise UnsupportedError(f"unknown extension kind {kind!r}")
    return Tower(tower.exts + (ext,), tower.var)


def _alpha_threshold(alpha: RatFunc, var: str) -> int:
    from .expr import _threshold

    return _threshold(alpha, var)


# ---------------------------------------------------------------------------
# expressions <-> towers


class _Builder:
    def __init__(self, tower: Tower):
        self.tower = tower

    def find(self, kind: str, **match) -> int | None:
        for i, ext in enumerate(self.tower.exts):
            if ext.kind != kind:
                continue
            if kind == PI and ext.alpha == match["alpha"] and ext.initial == match["initial"]:
                return i
            if kind == SIGN:
                return i
            if kind == SIGMA and ext.lower == match["lower"] and ext.summand.lift(self.tower) == match["summand"]:
                return i
        return None

    def push(self, kind: str, **data) -> int:
        self.tower = extend(self.tower, kind, check=False, **data)
        return len(self.tower) - 1

    def gen(self, i: int) -> TowerElem:
        return self.tower.gen(i)

    # conversion -------------------------------------------------------
    def element(self, e: Expr) -> TowerElem:
        k = self.tower.var
        total = self.tower.const(0)
        for mono, coeff in terms_of(e).items():
            term = self.tower.const(coeff)
            for atom, power in mono:
                value = self.atom(atom)
                term = term.lift(self.tower) * value.lift(self.tower) ** power
            total = total.lift(self.tower) + term
        return total.lift(self.tower)

    def atom(self, atom: Expr) -> TowerElem:
        k = self.tower.var
        if isinstance(atom, GenericAtom):
            raise UnsupportedError(f"generic sequence {atom.name} has no tower model")
        if isinstance(atom, Hyper):
            return self.hyper(atom)
        if isinstance(atom, Sum):
            return self.sum(atom)
        raise UnsupportedError(f"unsupported atom {atom}")

    def _running_shift(self, arg: Expr) -> int:
        k = self.tower.var
        value = as_ratfunc(arg)
        shift = value - RatFunc.var(k)
        if not shift.is_const() or shift.const_value().denominator != 1:
            raise UnsupportedError(f"argument {arg} is not {k} plus an integer")
        return int(shift.const_value())

    def hyper(self, atom: Hyper) -> TowerElem:
        k = self.tower.var
        running = atom.args[-1] if atom.kind in ("binom", "invbinom", "pow") else atom.args[0]
        if k not in as_ratfunc(running).variables:
            raise UnsupportedError(f"{atom} does not depend on {k}")
        for a in atom.args[:-1]:
            if k in as_ratfunc(a).variables:
                raise UnsupportedError(f"{atom} is not hypergeometric in {k} with a supported shape")
        m = self._running_shift(running)
        base_args = atom.args[:-1] + (Var(k),) if atom.kind in ("binom", "invbinom", "pow") else (Var(k),)
        base = Hyper(atom.kind, base_args)
        desc = describe_atom(base, k)
        if desc.sign_like:
            idx = self.find(SIGN)
            if idx is None:
                idx = self.push(SIGN, name="m", expr=base)
            elem = self.gen(idx)
        elif desc.sum_like:
            summand = self.tower.const(desc.summand)
            elem = self._sigma_elem(summand, desc.lower, base)
        else:
            power = 1
            ratio, expr, inv = desc.ratio, base, None
            if atom.kind == "invbinom":
                ratio, power = 1 / desc.ratio, -1
                expr = Hyper("binom", base_args)
            if expr.kind == "binom":
                inv = Hyper("invbinom", base_args)
            elif expr.kind == "pow":
                inv = Hyper("pow", (_ratnode(1 / as_ratfunc(base_args[0])), Var(k)))
            idx = self.find(PI, alpha=ratio, initial=desc.initial)
            if idx is None:
                idx = self.push(PI, name=f"t{len(self.tower)}", expr=expr, alpha=ratio,
                                initial=desc.initial, inverse_expr=inv)
            elem = self.gen(idx) ** power
        return _shift_elem(elem, m)

    def sum(self, atom: Sum) -> TowerElem:
        k = self.tower.var
        m = self._running_shift(atom.upper)
        from .expr import substitute_var

        body_k = normalize(substitute_var(atom.body, atom.var, Var(k)))
        summand = self.element(body_k)
        expr = atom if m == 0 else Sum(atom.var, atom.lower, Var(k), atom.body)
        elem = self._sigma_elem(summand, atom.lower, expr)
        return _shift_elem(elem.lift(self.tower), m)

    def _sigma_elem(self, summand: TowerElem, lower: int, expr: Expr) -> TowerElem:
        summand = summand.lift(self.tower)
        idx = self.find(SIGMA, lower=lower, summand=summand)
        if idx is not None:
            return self.gen(idx)
        beta = apply_sigma(summand, self.tower)
        verdict = check_sigma_ext(beta, self.tower)
        if isinstance(verdict, Inadmissible):
            g = verdict.witness.lift(self.tower)
            # Σ_{j=lower}^{k} x(j) = g(k) + x(lower) - g(lower)
            return g + (ev_symbolic(summand, lower) - ev_symbolic(g, lower))
        idx = self.push(SIGMA, name=f"s{len(self.tower)}", expr=expr, summand=summand, lower=lower)
        return self.gen(idx)


def _ratnode(f: RatFunc) -> Expr:
    from .expr import _rat_node

    return _rat_node(f)


def _shift_elem(e: TowerElem, m: int) -> TowerElem:
    for _ in range(abs(m)):
        e = apply_sigma(e) if m > 0 else apply_sigma_inv(e)
    return e


def from_expression(e: Expr, var: str = "k", tower: Tower | None = None) -> tuple[Tower, TowerElem]:
    """Embed ``e`` (an expression in ``var``) into a minimal tower."""
    builder = _Builder(tower or Tower((), var))
    elem = builder.element(normalize(e))
    return builder.tower, elem.lift(builder.tower)


def to_expression(e: TowerElem, tower: Tower | None = None) -> Expr:
    """Rewrite ``e`` with every generator replaced by its defining sequence."""
    tower = tower or e.tower
    e = e.lift(tower)
    out: dict = {}
    from .expr import _t_add, _t_mul, _t_pow

    for m, c in e.terms.items():
        term = {(): c}
        for i, x in enumerate(m):
            if not x:
                continue
            ext = tower.exts[i]
            if x > 0:
                factor = terms_of(ext.expr)
            else:
                if ext.inverse_expr is None:
                    raise UnsupportedError(f"no expression for the inverse of {ext.expr}")
                factor = terms_of(ext.inverse_expr)
            term = _t_mul(term, _t_pow(factor, abs(x)))
        out = _t_add(out, term)
    return from_terms(out)


def random_element(tower: Tower, rng, max_terms: int = 3, max_exp: int = 2) -> TowerElem:
    """Small random element used by property tests."""
    k = RatFunc.var(tower.var)
    out = tower.const(0)
    for _ in range(rng.randint(1, max_terms)):
        mono = []
        for ext in tower.exts:
            if ext.kind == PI:
                mono.append(rng.randint(-1, max_exp))
            elif ext.kind == SIGN:
                mono.append(rng.randint(0, 1))
            else:
                mono.append(rng.randint(0, max_exp))
        num = sum((rng.randint(-5, 5) * k**d for d in range(rng.randint(0, 2) + 1)), ZERO)
        shift = rng.randint(1, 4)
        coeff = num / (k + shift) if rng.random() < 0.3 else num
        out = out + TowerElem(tower, {tuple(mono): coeff})
    return out


def _binomial(n: int, k: int) -> int:
    return comb(n, k)
