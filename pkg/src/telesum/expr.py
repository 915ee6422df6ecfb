"""Expression trees for nested sums over generic and hypergeometric sequences.

Nodes are frozen dataclasses, so trees are hashable and compare structurally.
``normalize`` produces a canonical tree: a sum of monomials over atoms
(generic sequence entries, hypergeometric atoms and ``Sum`` nodes) with
rational-function coefficients, bound variables renamed canonically.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

from .algebra import ONE, ZERO, RatFunc, poly_str, to_fraction

__all__ = [
    "Expr",
    "Const",
    "Var",
    "GenericAtom",
    "Hyper",
    "Sum",
    "Add",
    "Mul",
    "Pow",
    "RatCoeff",
    "HyperAtom",
    "ExprError",
    "ParseError",
    "parse",
    "print_expr",
    "to_json",
    "from_json",
    "normalize",
    "shift",
    "substitute",
    "substitute_var",
    "free_vars",
    "generic_symbols",
    "as_ratfunc",
    "describe_atom",
    "terms_of",
    "from_terms",
    "HYPER_KINDS",
]

HYPER_KINDS = {
    "binom": 2,
    "invbinom": 2,
    "pow": 2,
    "altsign": 1,
    "harmonic": 1,
    "factorial": 1,
}


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add((self, _wrap(other)))

    def __radd__(self, other):
        return Add((_wrap(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Const(-1), _wrap(other)))))

    def __rsub__(self, other):
        return Add((_wrap(other), Mul((Const(-1), self))))

    def __mul__(self, other):
        return Mul((self, _wrap(other)))

    def __rmul__(self, other):
        return Mul((_wrap(other), self))

    def __neg__(self):
        return Mul((Const(-1), self))

    def __pow__(self, e: int):
        return Pow(self, e)

    def __str__(self):
        return print_expr(self)


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    if isinstance(x, RatFunc):
        return RatCoeff(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class GenericAtom(Expr):
    """Entry ``name[var + offset]`` of a generic sequence (``var`` None: constant index)."""

    name: str
    var: str | None
    offset: int


@dataclass(frozen=True)
class Hyper(Expr):
    kind: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Sum(Expr):
    var: str
    lower: int
    upper: Expr
    body: Expr


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True)
class Mul(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True)
class RatCoeff(Expr):
    value: RatFunc


# ---------------------------------------------------------------------------
# hypergeometric atom descriptions


@dataclass(frozen=True)
class HyperAtom:
    """Quotient-defined description of an atom as a sequence in ``var``.

    Product-like atoms satisfy t(k+1) = ratio(k) t(k) with t(0) = initial.
    Sum-like atoms (harmonic numbers) are Σ_{j=lower}^{k} summand(j).
    ``sign_like`` marks (-1)^k, which is an algebraic rather than a product atom.
    """

    name: str
    var: str
    ratio: RatFunc | None = None
    initial: RatFunc | None = None
    threshold: int = 0
    sum_like: bool = False
    summand: RatFunc | None = None
    lower: int = 0
    sign_like: bool = False


def describe_atom(atom: Hyper, var: str) -> HyperAtom:
    """Quotient description of ``atom`` viewed as a sequence in ``var``.

    Only atoms whose running argument is exactly ``var`` are described; shifted
    arguments are handled by the caller through the shift operator.
    """
    args = [as_ratfunc(a) for a in atom.args]
    k = RatFunc.var(var)
    name = print_expr(atom)
    if atom.kind in ("binom", "invbinom"):
        top, bottom = args
        if bottom != k or top.depends_on(var):
            raise ExprError(f"unsupported atom {name} in {var}")
        ratio = (top - k) / (k + 1)
        if atom.kind == "invbinom":
            ratio = 1 / ratio
        return HyperAtom(name, var, ratio, ONE, _threshold(ratio, var))
    if atom.kind == "pow":
        base, e = args
        if e != k or base.depends_on(var):
            raise ExprError(f"unsupported atom {name} in {var}")
        return HyperAtom(name, var, base, ONE, 0)
    if atom.kind == "factorial":
        if args[0] != k:
            raise ExprError(f"unsupported atom {name} in {var}")
        return HyperAtom(name, var, k + 1, ONE, 0)
    if atom.kind == "altsign":
        if args[0] != k:
            raise ExprError(f"unsupported atom {name} in {var}")
        return HyperAtom(name, var, RatFunc.const(-1), ONE, 0, sign_like=True)
    if atom.kind == "harmonic":
        if args[0] != k:
            raise ExprError(f"unsupported atom {name} in {var}")
        return HyperAtom(name, var, sum_like=True, summand=1 / k, lower=1)
    raise ExprError(f"unknown atom {atom.kind}")


def _threshold(ratio: RatFunc, var: str) -> int:
    """One past the largest nonnegative integer root of num/den of ``ratio``."""
    best = -1
    for part in (ratio.num, ratio.den):
        f = RatFunc.from_poly(part)
        if not f.depends_on(var) or set(f.variables) != {var}:
            continue
        coeffs = [c.const_value() for c in f.coefficients_in(var)]
        for root in _integer_roots(coeffs):
            if root >= 0:
                best = max(best, root)
    return best + 1


def _integer_roots(coeffs: list[Fraction]) -> list[int]:
    """Integer roots of the polynomial with ascending rational coefficients."""
    from math import lcm

    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return []
    m = lcm(*(c.denominator for c in coeffs))
    ints = [int(c * m) for c in coeffs]
    roots = []
    low = 0
    while ints[low] == 0:
        low += 1
    if low:
        roots.append(0)
    c0 = abs(ints[low])
    divisors = {d for d in range(1, int(c0**0.5) + 1) if c0 % d == 0}
    divisors |= {c0 // d for d in divisors}
    for d in sorted(divisors):
        for cand in (d, -d):
            if sum(c * cand**i for i, c in enumerate(ints)) == 0:
                roots.append(cand)
    return roots


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        skipped = text[pos:m.start(m.lastindex)]
        for i, ch in enumerate(skipped):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        start = m.start(m.lastindex)
        col = start - line_start + 1
        if m.group(1) is not None:
            tokens.append(("int", m.group(1), line, col))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), line, col))
        else:
            ch = m.group(3)
            if ch not in "()[],+-*/^":
                raise ParseError(f"unexpected character {ch!r}", line, col)
            tokens.append(("op", ch, line, col))
        pos = m.end()
    tokens.append(("end", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.bound: list[str] = []

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    def expect(self, value: str):
        tok = self.next()
        if tok[1] != value or tok[0] == "int":
            self.fail(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok[0] == "op" and tok[1] == value

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        terms = []
        sign = 1
        if self.at("+") or self.at("-"):
            sign = -1 if self.next()[1] == "-" else 1
        terms.append(_negate(self.term()) if sign < 0 else self.term())
        while self.at("+") or self.at("-"):
            op = self.next()[1]
            t = self.term()
            terms.append(_negate(t) if op == "-" else t)
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expr:
        factors = [self.factor()]
        while self.at("*") or self.at("/"):
            op = self.next()
            f = self.factor()
            if op[1] == "/":
                f = _reciprocal(f, op)
            factors.append(f)
        return _fold_mul(factors)

    def factor(self) -> Expr:
        base = self.base()
        if not self.at("^"):
            return base
        tok = self.next()
        if self.peek()[0] == "int":
            return _power(base, int(self.next()[1]), tok)
        if self.at("-") and self.tokens[self.i + 1][0] == "int":
            self.next()
            return _power(base, -int(self.next()[1]), tok)
        if self.peek()[0] == "name":
            exponent = Var(self.next()[1])
        elif self.at("("):
            self.next()
            exponent = self.expr()
            self.expect(")")
        else:
            self.fail("malformed exponent")
        value = as_ratfunc(exponent)
        if value is not None and value.is_const():
            v = value.const_value()
            if v.denominator != 1:
                self.fail("exponent must be an integer", tok)
            return _power(base, int(v), tok)
        base_value = as_ratfunc(base)
        if base_value is None:
            self.fail("symbolic exponent needs a rational or parameter base", tok)
        if base_value == RatFunc.const(-1):
            return Hyper("altsign", (exponent,))
        return Hyper("pow", (base, exponent))

    def base(self) -> Expr:
        tok = self.next()
        kind, value = tok[0], tok[1]
        if kind == "int":
            return Const(Fraction(int(value)))
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind != "name":
            self.fail(f"unexpected {value or 'end of input'!r}", tok)
        if value == "Sum" and self.at("("):
            return self.sum_node()
        if self.at("("):
            if value not in HYPER_KINDS:
                self.fail(f"unknown atom name {value!r}", tok)
            self.next()
            args = [self.expr()]
            while self.at(","):
                self.next()
                args.append(self.expr())
            self.expect(")")
            if len(args) != HYPER_KINDS[value]:
                self.fail(f"{value} takes {HYPER_KINDS[value]} argument(s)", tok)
            return Hyper(value, tuple(args))
        if self.at("["):
            self.next()
            index = self.expr()
            close = self.expect("]")
            try:
                var, offset = _affine_index(index)
            except ExprError as exc:
                self.fail(str(exc), close)
            return GenericAtom(value, var, offset)
        return Var(value)

    def sum_node(self) -> Expr:
        self.expect("(")
        tok = self.next()
        if tok[0] != "name":
            self.fail("summation variable expected", tok)
        var = tok[1]
        if var in self.bound:
            self.fail(f"shadowed bound variable {var!r}", tok)
        self.expect(",")
        sign = 1
        if self.at("-"):
            self.next()
            sign = -1
        low = self.next()
        if low[0] != "int":
            self.fail("integer lower bound expected", low)
        lower = sign * int(low[1])
        self.expect(",")
        upper = self.expr()
        self.expect(",")
        self.bound.append(var)
        body = self.expr()
        self.bound.pop()
        self.expect(")")
        return Sum(var, lower, upper, body)


def _negate(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        c = -e.factors[0].value
        rest = e.factors[1:]
        if c == 1:
            return rest[0] if len(rest) == 1 else Mul(rest)
        return Mul((Const(c),) + rest)
    return Mul((Const(-1), e))


def _fold_mul(factors: list[Expr]) -> Expr:
    flat: list[Expr] = []
    const = Fraction(1)
    for f in factors:
        if isinstance(f, Const):
            const *= f.value
        elif isinstance(f, Mul):
            for g in f.factors:
                if isinstance(g, Const):
                    const *= g.value
                else:
                    flat.append(g)
        else:
            flat.append(f)
    if const != 1 or not flat:
        flat.insert(0, Const(const))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def _power(base: Expr, e: int, tok) -> Expr:
    if isinstance(base, Const):
        if base.value == 0 and e < 0:
            raise ParseError("division by zero", tok[2], tok[3])
        return Const(base.value**e)
    if e < 0:
        value = as_ratfunc(base)
        if value is None or value.is_zero():
            raise ParseError("negative powers are only allowed for rational bases", tok[2], tok[3])
        return RatCoeff(value**e)
    return Pow(base, e)


def _reciprocal(e: Expr, tok) -> Expr:
    value = as_ratfunc(e)
    if value is not None:
        if value.is_zero():
            raise ParseError("division by zero", tok[2], tok[3])
        inv = 1 / value
        return Const(inv.const_value()) if inv.is_const() else RatCoeff(inv)
    if isinstance(e, Hyper):
        if e.kind == "binom":
            return Hyper("invbinom", e.args)
        if e.kind == "invbinom":
            return Hyper("binom", e.args)
        if e.kind == "altsign":
            return e
        if e.kind == "pow":
            base = as_ratfunc(e.args[0])
            if base is not None and not base.is_zero():
                return Hyper("pow", (_rat_node(1 / base), e.args[1]))
    if isinstance(e, Pow):
        return Pow(_reciprocal(e.base, tok), e.exp)
    if isinstance(e, Mul):
        return _fold_mul([_reciprocal(f, tok) for f in e.factors])
    raise ParseError("division is only supported by rational expressions and binomials", tok[2], tok[3])


def _affine_index(e: Expr) -> tuple[str | None, int]:
    value = as_ratfunc(e)
    if value is None or not value.is_poly():
        raise ExprError("generic index must be a variable plus an integer")
    names = value.variables
    if len(names) > 1:
        raise ExprError("generic index must involve a single variable")
    if not names:
        c = value.const_value()
        if c.denominator != 1:
            raise ExprError("generic index must be an integer")
        return None, int(c)
    (name,) = names
    coeffs = value.coefficients_in(name)
    if len(coeffs) != 2 or coeffs[1] != ONE:
        raise ExprError("generic index must be a variable plus an integer")
    c = coeffs[0].const_value()
    if c.denominator != 1:
        raise ExprError("generic index offset must be an integer")
    return name, int(c)


def parse(text: str) -> Expr:
    """Parse the plain expression syntax into a (raw, unnormalized) tree."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing


def print_expr(e: Expr, fmt: str = "plain") -> str:
    if fmt == "plain":
        return _plain(e)
    if fmt == "latex":
        return _latex(e)
    if fmt == "json":
        return json.dumps(to_json(e), sort_keys=True)
    raise ValueError(f"unknown format {fmt!r}")


def _is_negative(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, RatCoeff):
        return str(e.value).startswith("-")
    if isinstance(e, Mul):
        return _is_negative(e.factors[0])
    return False


def _leading_negative(f: RatFunc) -> bool:
    s = str(f)
    return s.startswith("-") and "+" not in s[1:] and "-" not in s[1:].split("/")[0]


@lru_cache(maxsize=65536)
def _plain(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, RatCoeff):
        return str(e.value)
    if isinstance(e, GenericAtom):
        return f"{e.name}[{_index_str(e.var, e.offset)}]"
    if isinstance(e, Hyper):
        return f"{e.kind}({','.join(_plain(a) for a in e.args)})"
    if isinstance(e, Sum):
        return f"Sum({e.var},{e.lower},{_plain(e.upper)},{_plain(e.body)})"
    if isinstance(e, Pow):
        return f"{_plain_factor(e.base, strict=True)}^{e.exp}"
    if isinstance(e, Mul):
        return _plain_mul(e.factors)
    if isinstance(e, Add):
        out = _plain(e.terms[0])
        for t in e.terms[1:]:
            if _is_negative(t):
                neg = _negate_for_print(t)
                s = _plain(neg)
                if isinstance(neg, RatCoeff) and any(ch in s for ch in "+-"):
                    s = f"({s})"
                out += " - " + s
            else:
                out += " + " + _plain(t)
        return out
    raise TypeError(type(e).__name__)


def _negate_for_print(e: Expr) -> Expr:
    if isinstance(e, RatCoeff):
        return RatCoeff(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], RatCoeff):
        return Mul((RatCoeff(-e.factors[0].value),) + e.factors[1:])
    return _negate(e)


def _plain_mul(factors: tuple[Expr, ...]) -> str:
    first = factors[0]
    rest = factors[1:]
    prefix = ""
    if isinstance(first, Const) and first.value == -1 and rest:
        prefix = "-"
        factors = rest
    elif isinstance(first, RatCoeff) and rest and _leading_negative(first.value):
        prefix = "-"
        factors = (RatCoeff(-first.value),) + rest
    parts = []
    for i, f in enumerate(factors):
        parts.append(_plain_factor(f, strict=False, first=(i == 0)))
    return prefix + "*".join(parts)


def _plain_factor(e: Expr, strict: bool, first: bool = False) -> str:
    s = _plain(e)
    if isinstance(e, (Add, Mul)):
        return f"({s})"
    if isinstance(e, Const):
        if e.value < 0 or (strict and e.value.denominator != 1):
            return f"({s})"
        return s
    if isinstance(e, RatCoeff):
        if any(ch in s[1:] for ch in "+-") or "/" in s or "*" in s and strict or s.startswith("-"):
            return f"({s})"
        if strict and "^" in s:
            return f"({s})"
        return s
    return s


def _index_str(var: str | None, offset: int) -> str:
    if var is None:
        return str(offset)
    if offset > 0:
        return f"{var}+{offset}"
    if offset < 0:
        return f"{var}-{-offset}"
    return var


def _latex(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator)
        sign = "-" if v < 0 else ""
        return f"{sign}\\frac{{{abs(v.numerator)}}}{{{v.denominator}}}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, RatCoeff):
        return _latex_rat(e.value)
    if isinstance(e, GenericAtom):
        return f"{e.name}_{{{_index_str(e.var, e.offset)}}}"
    if isinstance(e, Hyper):
        a = [_latex(x) for x in e.args]
        if e.kind == "binom":
            return f"\\binom{{{a[0]}}}{{{a[1]}}}"
        if e.kind == "invbinom":
            return f"\\binom{{{a[0]}}}{{{a[1]}}}^{{-1}}"
        if e.kind == "pow":
            return f"{_latex_group(e.args[0])}^{{{a[1]}}}"
        if e.kind == "altsign":
            return f"(-1)^{{{a[0]}}}"
        if e.kind == "harmonic":
            return f"H_{{{a[0]}}}"
        if e.kind == "factorial":
            return f"{_latex_group(e.args[0])}!"
    if isinstance(e, Sum):
        body = _latex(e.body)
        if isinstance(e.body, Add):
            body = f"\\left({body}\\right)"
        return f"\\sum_{{{e.var}={e.lower}}}^{{{_latex(e.upper)}}} {body}"
    if isinstance(e, Pow):
        return f"{_latex_group(e.base)}^{{{e.exp}}}"
    if isinstance(e, Mul):
        parts = []
        factors = e.factors
        prefix = ""
        if isinstance(factors[0], Const) and factors[0].value == -1:
            prefix, factors = "-", factors[1:]
        for f in factors:
            s = _latex(f)
            if isinstance(f, (Add,)) or (isinstance(f, RatCoeff) and len(f.value.num) > 1 and f.value.is_poly()):
                s = f"\\left({s}\\right)"
            parts.append(s)
        return prefix + " ".join(parts)
    if isinstance(e, Add):
        out = _latex(e.terms[0])
        for t in e.terms[1:]:
            s = _latex(t)
            out += f" - {s[1:].lstrip()}" if s.startswith("-") else f" + {s}"
        return out
    raise TypeError(type(e).__name__)


def _latex_group(e: Expr) -> str:
    s = _latex(e)
    if isinstance(e, (Var, GenericAtom, Hyper)) or (isinstance(e, Const) and e.value >= 0 and e.value.denominator == 1):
        return s
    return f"\\left({s}\\right)"


def _latex_rat(f: RatFunc) -> str:
    def poly(p):
        s = poly_str(p)
        s = re.sub(r"\^(\d+)", r"^{\1}", s)
        return s.replace("*", " ").replace("+", " + ").replace("-", " - ").strip()

    if f.is_poly():
        return poly(f.num)
    return f"\\frac{{{poly(f.num)}}}{{{poly(f.den)}}}"


def to_json(e: Expr):
    if isinstance(e, Const):
        return {"kind": "Const", "value": str(e.value)}
    if isinstance(e, Var):
        return {"kind": "Var", "name": e.name}
    if isinstance(e, RatCoeff):
        return {"kind": "RatCoeff", "value": str(e.value)}
    if isinstance(e, GenericAtom):
        return {"kind": "GenericAtom", "name": e.name, "var": e.var, "offset": e.offset}
    if isinstance(e, Hyper):
        return {"kind": "HyperAtom", "name": e.kind, "args": [to_json(a) for a in e.args]}
    if isinstance(e, Sum):
        return {"kind": "Sum", "var": e.var, "lower": e.lower, "upper": to_json(e.upper), "body": to_json(e.body)}
    if isinstance(e, Pow):
        return {"kind": "Pow", "base": to_json(e.base), "exp": e.exp}
    if isinstance(e, Mul):
        return {"kind": "Mul", "factors": [to_json(f) for f in e.factors]}
    if isinstance(e, Add):
        return {"kind": "Add", "terms": [to_json(t) for t in e.terms]}
    raise TypeError(type(e).__name__)


def from_json(data) -> Expr:
    kind = data["kind"]
    if kind == "Const":
        return Const(Fraction(data["value"]))
    if kind == "Var":
        return Var(data["name"])
    if kind == "RatCoeff":
        value = as_ratfunc(parse(data["value"]))
        if value is None:
            raise ExprError("RatCoeff payload is not rational")
        return RatCoeff(value)
    if kind == "GenericAtom":
        return GenericAtom(data["name"], data["var"], int(data["offset"]))
    if kind == "HyperAtom":
        return Hyper(data["name"], tuple(from_json(a) for a in data["args"]))
    if kind == "Sum":
        return Sum(data["var"], int(data["lower"]), from_json(data["upper"]), from_json(data["body"]))
    if kind == "Pow":
        return Pow(from_json(data["base"]), int(data["exp"]))
    if kind == "Mul":
        return Mul(tuple(from_json(f) for f in data["factors"]))
    if kind == "Add":
        return Add(tuple(from_json(t) for t in data["terms"]))
    raise ExprError(f"unknown node kind {kind!r}")


# ---------------------------------------------------------------------------
# structural queries


@lru_cache(maxsize=65536)
def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, RatCoeff):
        return frozenset(e.value.variables)
    if isinstance(e, GenericAtom):
        return frozenset(() if e.var is None else (e.var,))
    if isinstance(e, Hyper):
        return frozenset().union(*(free_vars(a) for a in e.args))
    if isinstance(e, Sum):
        return free_vars(e.upper) | (free_vars(e.body) - {e.var})
    if isinstance(e, Pow):
        return free_vars(e.base)
    if isinstance(e, Mul):
        return frozenset().union(*(free_vars(f) for f in e.factors))
    if isinstance(e, Add):
        return frozenset().union(*(free_vars(t) for t in e.terms))
    raise TypeError(type(e).__name__)


def _children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Hyper):
        return e.args
    if isinstance(e, Sum):
        return (e.upper, e.body)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Add):
        return e.terms
    return ()


def generic_symbols(e: Expr) -> frozenset[str]:
    if isinstance(e, GenericAtom):
        return frozenset((e.name,))
    return frozenset().union(*(generic_symbols(c) for c in _children(e)))


def walk(e: Expr) -> Iterable[Expr]:
    yield e
    for c in _children(e):
        yield from walk(c)


@lru_cache(maxsize=65536)
def _height(e: Expr) -> int:
    """Nesting depth of sums: -1 when ``e`` contains no Sum node."""
    below = max((_height(c) for c in _children(e)), default=-1)
    return below + 1 if isinstance(e, Sum) else below


def as_ratfunc(e: Expr) -> RatFunc | None:
    """The rational function denoted by ``e``, or None if it involves atoms."""
    if isinstance(e, Const):
        return RatFunc.const(e.value)
    if isinstance(e, Var):
        return RatFunc.var(e.name)
    if isinstance(e, RatCoeff):
        return e.value
    if isinstance(e, (GenericAtom, Sum)):
        return None
    if isinstance(e, Hyper):
        terms = terms_of(e)
        if all(m == () for m in terms):
            return terms.get((), ZERO)
        return None
    if isinstance(e, Pow):
        b = as_ratfunc(e.base)
        return None if b is None else b**e.exp
    if isinstance(e, Mul):
        out = ONE
        for f in e.factors:
            v = as_ratfunc(f)
            if v is None:
                return None
            out = out * v
        return out
    if isinstance(e, Add):
        out = ZERO
        for t in e.terms:
            v = as_ratfunc(t)
            if v is None:
                return None
            out = out + v
        return out
    raise TypeError(type(e).__name__)


def _rat_node(f: RatFunc) -> Expr:
    if f.is_const():
        return Const(f.const_value())
    if f.is_poly() and len(f.num) == 1:
        (monom, coeff), = f.num.iterterms()
        if coeff == 1 and sum(monom) == 1:
            return Var(f.variables[0])
    return RatCoeff(f)


# ---------------------------------------------------------------------------
# normal form: dict monomial -> RatFunc, monomial = sorted tuple (atom, exp)

Mono = tuple
Terms = dict

_NAMES = ["i", "j", "l", "m", "p", "q", "r"]


def _atom_key(atom: Expr):
    rank = 0 if isinstance(atom, Hyper) else 1 if isinstance(atom, GenericAtom) else 2
    return (rank, _plain(atom))


def _mono_key(mono: Mono):
    return tuple((_atom_key(a), e) for a, e in mono)


def _mono_mul(m1: Mono, m2: Mono) -> tuple[Mono, int]:
    if not m1:
        return m2, 1
    if not m2:
        return m1, 1
    powers = dict(m1)
    for a, e in m2:
        powers[a] = powers.get(a, 0) + e
    for a in list(powers):
        if isinstance(a, Hyper) and a.kind == "altsign":
            powers[a] %= 2
        if powers[a] == 0:
            del powers[a]
    return tuple(sorted(powers.items(), key=lambda t: _atom_key(t[0]))), 1


def _t_add(a: Terms, b: Terms, scale: RatFunc = ONE) -> Terms:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, ZERO) + (c if scale is ONE else c * scale)
        if v.is_zero():
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _t_scale(a: Terms, c: RatFunc) -> Terms:
    if c.is_zero():
        return {}
    return {m: v * c for m, v in a.items()}


def _t_mul(a: Terms, b: Terms) -> Terms:
    out: Terms = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m, _ = _mono_mul(m1, m2)
            v = out.get(m, ZERO) + c1 * c2
            if v.is_zero():
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _t_pow(a: Terms, e: int) -> Terms:
    out: Terms = {(): ONE}
    base = a
    while e:
        if e & 1:
            out = _t_mul(out, base)
        e >>= 1
        if e:
            base = _t_mul(base, base)
    return out


def _t_const(c: RatFunc) -> Terms:
    return {} if c.is_zero() else {(): c}


def _t_atom(atom: Expr, coeff: RatFunc = ONE) -> Terms:
    return {((atom, 1),): coeff} if not coeff.is_zero() else {}


def terms_of(e: Expr) -> Terms:
    """Normal-form term map of ``e`` (a fresh dict the caller may mutate)."""
    return dict(_terms_cached(e))


@lru_cache(maxsize=65536)
def _terms_cached(e: Expr) -> tuple:
    return tuple(_terms(e).items())


def _terms(e: Expr) -> Terms:
    if isinstance(e, Const):
        return _t_const(RatFunc.const(e.value))
    if isinstance(e, Var):
        return _t_const(RatFunc.var(e.name))
    if isinstance(e, RatCoeff):
        return _t_const(e.value)
    if isinstance(e, GenericAtom):
        return _t_atom(e)
    if isinstance(e, Hyper):
        args = []
        for a in e.args:
            v = _terms_to_rat(terms_of(a))
            if v is None:
                raise ExprError(f"atom arguments must be rational: {_plain(e)}")
            args.append(v)
        return _hyper_terms(e.kind, tuple(args))
    if isinstance(e, Sum):
        upper = _terms_to_rat(terms_of(e.upper))
        if upper is None:
            raise ExprError("sum upper bound must be rational")
        return _sum_terms(e.var, e.lower, upper, terms_of(e.body))
    if isinstance(e, Add):
        out: Terms = {}
        for t in e.terms:
            out = _t_add(out, terms_of(t))
        return out
    if isinstance(e, Mul):
        out = {(): ONE}
        for f in e.factors:
            out = _t_mul(out, terms_of(f))
            if not out:
                break
        return out
    if isinstance(e, Pow):
        if e.exp < 0:
            raise ExprError("negative exponent")
        return _t_pow(terms_of(e.base), e.exp)
    raise TypeError(type(e).__name__)


def _terms_to_rat(t: Terms) -> RatFunc | None:
    if not t:
        return ZERO
    if set(t) != {()}:
        return None
    return t[()]


def _split_const(f: RatFunc) -> tuple[RatFunc, Fraction]:
    """Split an affine ``f`` as (non-constant part, constant term)."""
    if not f.is_poly():
        return f, Fraction(0)
    c = Fraction(0)
    for monom, coeff in f.num.iterterms():
        if sum(monom) == 0:
            from .algebra import to_fraction

            c = to_fraction(coeff)
    return f - c, c


def _is_int(c: Fraction) -> bool:
    return c.denominator == 1


def _binom_value(top: RatFunc, j: int) -> RatFunc:
    if j < 0:
        return ZERO
    out = ONE
    for t in range(j):
        out = out * (top - t) / (t + 1)
    return out


def _hyper_terms(kind: str, args: tuple[RatFunc, ...]) -> Terms:
    if kind == "altsign":
        (arg,) = args
        rest, c = _split_const(arg)
        if not _is_int(c):
            raise ExprError("altsign needs an integer-affine argument")
        sign = -1 if c.numerator % 2 else 1
        if rest.is_zero():
            return _t_const(RatFunc.const(sign))
        if rest.is_poly() and all(to_int_even(coeff) for _, coeff in rest.num.iterterms()):
            return _t_const(RatFunc.const(sign))
        return _t_atom(Hyper("altsign", (_rat_node(rest),)), RatFunc.const(sign))
    if kind == "pow":
        base, e = args
        if base == RatFunc.const(-1):
            return _hyper_terms("altsign", (e,))
        if base == ONE:
            return _t_const(ONE)
        rest, c = _split_const(e)
        if not _is_int(c):
            raise ExprError("pow needs an integer-affine exponent")
        if rest.is_zero():
            if base.is_zero() and c < 0:
                raise ExprError("0 raised to a negative power")
            return _t_const(base ** int(c))
        if base.is_zero():
            return _t_atom(Hyper("pow", (_rat_node(base), _rat_node(rest))))
        return _t_atom(Hyper("pow", (_rat_node(base), _rat_node(rest))), base ** int(c))
    if kind == "binom":
        top, bottom = args
        if bottom.is_const():
            b = bottom.const_value()
            if not _is_int(b):
                raise ExprError("binom needs an integer lower argument")
            return _t_const(_binom_value(top, int(b)))
        return _t_atom(Hyper("binom", (_rat_node(top), _rat_node(bottom))))
    if kind == "invbinom":
        top, bottom = args
        if bottom.is_const():
            b = bottom.const_value()
            value = _binom_value(top, int(b)) if _is_int(b) else ZERO
            if not value.is_zero():
                return _t_const(1 / value)
        return _t_atom(Hyper("invbinom", (_rat_node(top), _rat_node(bottom))))
    if kind == "harmonic":
        (arg,) = args
        if arg.is_const():
            n = arg.const_value()
            if not _is_int(n):
                raise ExprError("harmonic needs an integer argument")
            return _t_const(RatFunc.const(sum((Fraction(1, i) for i in range(1, int(n) + 1)), Fraction(0))))
        return _t_atom(Hyper("harmonic", (_rat_node(arg),)))
    if kind == "factorial":
        (arg,) = args
        if arg.is_const():
            n = arg.const_value()
            if _is_int(n) and n >= 0:
                out = 1
                for i in range(2, int(n) + 1):
                    out *= i
                return _t_const(RatFunc.const(out))
        return _t_atom(Hyper("factorial", (_rat_node(arg),)))
    raise ExprError(f"unknown atom name {kind!r}")


def to_int_even(coeff) -> bool:
    from .algebra import to_fraction

    c = to_fraction(coeff)
    return c.denominator == 1 and c.numerator % 2 == 0


def _bound_name(height: int, avoid: frozenset[str], t: int = 0) -> str:
    base = _NAMES[height] if height < len(_NAMES) else f"v{height}_"
    if base not in avoid:
        return base
    t = 1
    while f"{base}{t}" in avoid:
        t += 1
    return f"{base}{t}"


def _terms_free(t: Terms) -> frozenset[str]:
    out: set[str] = set()
    for m, c in t.items():
        out.update(c.variables)
        for a, _ in m:
            out |= free_vars(a)
    return frozenset(out)


def _terms_height(t: Terms) -> int:
    return max((_height(a) for m in t for a, _ in m), default=-1)


def _sum_terms(var: str, lower: int, upper: RatFunc, body: Terms) -> Terms:
    if not body:
        return {}
    if upper.is_const():
        u = upper.const_value()
        if not _is_int(u):
            raise ExprError("sum bounds must be integers")
        out: Terms = {}
        for v in range(lower, int(u) + 1):
            out = _t_add(out, _t_subst(body, var, RatFunc.const(v)))
        return out
    body_free = _terms_free(body)
    if var not in body_free:
        node_free = body_free | frozenset(upper.variables)
    else:
        node_free = (body_free - {var}) | frozenset(upper.variables)
    name = _bound_name(_terms_height(body) + 1, node_free)
    if name != var:
        body = _t_subst(body, var, RatFunc.var(name))
    content = ONE
    if len(body) == 1:
        # a lone term carries its numeric factor outside the sum
        (coeff,) = body.values()
        content = RatFunc.const(to_fraction(coeff.num.LC))
        body = _t_scale(body, ONE / content)
    node = Sum(name, lower, _rat_node(upper), from_terms(body))
    return _t_atom(node, content)


_fresh_counter = [0]


def _fresh(avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    while True:
        _fresh_counter[0] += 1
        name = f"_t{_fresh_counter[0]}"
        if name not in avoid:
            return name


def _t_subst(t: Terms, var: str, repl: RatFunc) -> Terms:
    """Substitute ``var -> repl`` (a rational function) in normal-form terms."""
    out: Terms = {}
    for m, c in t.items():
        term = _t_const(c.subs({var: repl}) if var in c.variables else c)
        for a, e in m:
            if var in free_vars(a):
                term = _t_mul(term, _t_pow(_atom_subst(a, var, repl), e))
            else:
                term = _t_mul(term, _t_atom(a) if e == 1 else {((a, e),): ONE})
            if not term:
                break
        out = _t_add(out, term)
    return out


def _atom_subst(a: Expr, var: str, repl: RatFunc) -> Terms:
    if isinstance(a, GenericAtom):
        index = repl + a.offset
        rest, c = _split_const(index)
        if not _is_int(c):
            raise ExprError("generic index must stay integral")
        if rest.is_zero():
            return _t_atom(GenericAtom(a.name, None, int(c)))
        vs = rest.variables
        if len(vs) != 1 or rest != RatFunc.var(vs[0]):
            raise ExprError(f"unsupported generic index {index}")
        return _t_atom(GenericAtom(a.name, vs[0], int(c)))
    if isinstance(a, Hyper):
        args = tuple(as_ratfunc(x).subs({var: repl}) for x in a.args)
        return _hyper_terms(a.kind, args)
    if isinstance(a, Sum):
        body = terms_of(a.body)
        bvar = a.var
        if bvar in repl.variables:
            new = _fresh(set(repl.variables) | _terms_free(body))
            body = _t_subst(body, bvar, RatFunc.var(new))
            bvar = new
        upper = as_ratfunc(a.upper).subs({var: repl})
        return _sum_terms(bvar, a.lower, upper, _t_subst(body, var, repl))
    raise TypeError(type(a).__name__)


def from_terms(t: Terms) -> Expr:
    if not t:
        return Const(Fraction(0))
    items = sorted(t.items(), key=lambda kv: (kv[0] == (), _mono_key(kv[0])))
    nodes = []
    for mono, c in items:
        factors = [a if e == 1 else Pow(a, e) for a, e in mono]
        if not factors:
            nodes.append(_rat_node(c))
        elif c == ONE:
            nodes.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
        else:
            nodes.append(Mul((_rat_node(c), *factors)))
    return nodes[0] if len(nodes) == 1 else Add(tuple(nodes))


# ---------------------------------------------------------------------------
# public transformations


def normalize(e: Expr) -> Expr:
    """Canonical form; empty sums vanish and constant-range sums are expanded."""
    return from_terms(terms_of(e))


def substitute_var(e: Expr, name: str, repl: Expr) -> Expr:
    """Capture-avoiding replacement of the free variable ``name`` (raw tree)."""
    if name not in free_vars(e):
        return e
    if isinstance(e, Var):
        return repl
    if isinstance(e, RatCoeff):
        r = as_ratfunc(repl)
        if r is None:
            raise ExprError("cannot substitute a non-rational expression into a coefficient")
        v = e.value.subs({name: r})
        return _rat_node(v)
    if isinstance(e, GenericAtom):
        r = as_ratfunc(repl)
        if r is None:
            raise ExprError("generic index must stay rational")
        ((mono, _),) = _atom_subst(e, name, r).items()
        return mono[0][0]
    if isinstance(e, Hyper):
        return Hyper(e.kind, tuple(substitute_var(a, name, repl) for a in e.args))
    if isinstance(e, Sum):
        var, body = e.var, e.body
        if var in free_vars(repl):
            new = _fresh(free_vars(repl) | free_vars(body))
            body = substitute_var(body, var, Var(new))
            var = new
        return Sum(var, e.lower, substitute_var(e.upper, name, repl), substitute_var(body, name, repl))
    if isinstance(e, Pow):
        return Pow(substitute_var(e.base, name, repl), e.exp)
    if isinstance(e, Mul):
        return Mul(tuple(substitute_var(f, name, repl) for f in e.factors))
    if isinstance(e, Add):
        return Add(tuple(substitute_var(t, name, repl) for t in e.terms))
    return e


def shift(e: Expr, var: str, m: int) -> Expr:
    """Normal form of ``e`` with ``var -> var + m``."""
    return from_terms(_t_subst(terms_of(e), var, RatFunc.var(var) + m))


def substitute(e: Expr, symbol: str, replacement: Expr, index: str = "k") -> Expr:
    """Replace every entry ``symbol[v+l]`` by ``replacement`` with ``index -> v+l``.

    Raises :class:`ExprError` if a free variable of the replacement would be
    captured by an enclosing sum.
    """
    outside = free_vars(replacement) - {index}
    return _substitute(e, symbol, replacement, index, outside, frozenset())


def _substitute(e, symbol, replacement, index, outside, bound) -> Expr:
    if isinstance(e, GenericAtom):
        if e.name != symbol:
            return e
        clash = outside & bound
        if clash:
            raise ExprError(f"substitution would capture {sorted(clash)}")
        target: Expr = Const(e.offset) if e.var is None else (
            Var(e.var) if e.offset == 0 else RatCoeff(RatFunc.var(e.var) + e.offset))
        return substitute_var(replacement, index, target) if index in free_vars(replacement) else replacement
    if isinstance(e, Sum):
        return Sum(e.var, e.lower, e.upper, _substitute(e.body, symbol, replacement, index, outside, bound | {e.var}))
    if isinstance(e, Hyper):
        return e
    if isinstance(e, Pow):
        return Pow(_substitute(e.base, symbol, replacement, index, outside, bound), e.exp)
    if isinstance(e, Mul):
        return Mul(tuple(_substitute(f, symbol, replacement, index, outside, bound) for f in e.factors))
    if isinstance(e, Add):
        return Add(tuple(_substitute(t, symbol, replacement, index, outside, bound) for t in e.terms))
    return e


def rename_symbol(e: Expr, old: str, new: str) -> Expr:
    if isinstance(e, GenericAtom):
        return GenericAtom(new, e.var, e.offset) if e.name == old else e
    if isinstance(e, Sum):
        return Sum(e.var, e.lower, e.upper, rename_symbol(e.body, old, new))
    if isinstance(e, Pow):
        return Pow(rename_symbol(e.base, old, new), e.exp)
    if isinstance(e, Mul):
        return Mul(tuple(rename_symbol(f, old, new) for f in e.factors))
    if isinstance(e, Add):
        return Add(tuple(rename_symbol(t, old, new) for t in e.terms))
    return e


def subs_params(e: Expr, values: Mapping[str, RatFunc]) -> Expr:
    """Substitute rational values for free parameters (normalized result)."""
    t = terms_of(e)
    for name, value in values.items():
        t = _t_subst(t, name, value)
    return from_terms(t)


Number = Union[int, Fraction]
