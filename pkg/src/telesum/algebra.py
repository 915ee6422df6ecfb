"""Exact arithmetic kernel.

Rationals are :class:`fractions.Fraction`.  Multivariate polynomials are sympy
``PolyElement`` objects over ``QQ`` in graded-lex order; rational functions are
wrapped in :class:`RatFunc`, which keeps numerator and denominator coprime with
a monic denominator after every operation, so equality is structural.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

from sympy import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

Number = Union[int, Fraction]

__all__ = [
    "AlgebraError",
    "RatFunc",
    "LinearSolution",
    "poly_ring",
    "lift",
    "unify",
    "poly_gcd",
    "normalize_ratfunc",
    "eval_rat",
    "solve_linear_system",
    "to_fraction",
]


class AlgebraError(ArithmeticError):
    pass


def to_fraction(c) -> Fraction:
    """Convert a ground-domain coefficient (mpq, int, Fraction) to Fraction."""
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    return Fraction(int(c.numerator), int(c.denominator))


def _qq(c: Number):
    if isinstance(c, Fraction):
        return QQ(c.numerator, c.denominator)
    return QQ(c)


@lru_cache(maxsize=None)
def poly_ring(names: tuple[str, ...]) -> PolyRing:
    if not names:
        # A ring needs at least one generator; the placeholder never appears
        # in a monomial with nonzero degree.
        names = ("_",)
    return PolyRing(names, QQ, grlex)


def _sorted_names(names: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(names) - {"_"}))


def _used(p: PolyElement) -> set[str]:
    gens = p.ring.symbols
    used = set()
    for monom in p.itermonoms():
        for name, e in zip(gens, monom):
            if e:
                used.add(str(name))
    return used


def lift(p: PolyElement, names: Sequence[str]) -> PolyElement:
    """Re-express ``p`` in the ring generated by ``names`` (a superset)."""
    target = poly_ring(tuple(names))
    if p.ring is target:
        return p
    src = [str(s) for s in p.ring.symbols]
    index = {str(name): i for i, name in enumerate(target.symbols)}
    out = target.zero.copy()
    width = len(target.symbols)
    for monom, coeff in p.iterterms():
        new = [0] * width
        for name, e in zip(src, monom):
            if e:
                try:
                    new[index[name]] = e
                except KeyError:
                    raise AlgebraError(f"variable {name} missing from target ring") from None
        out[tuple(new)] = coeff
    return out


def unify(*polys: PolyElement) -> list[PolyElement]:
    names = set()
    for p in polys:
        names |= _used(p)
    ordered = _sorted_names(names)
    return [lift(p, ordered) for p in polys]


def _shrink(p: PolyElement) -> PolyElement:
    return lift(p, _sorted_names(_used(p)))


def _monic(p: PolyElement) -> PolyElement:
    if not p:
        return p
    return p.quo_ground(p.LC)


def poly_gcd(a: PolyElement, b: PolyElement) -> PolyElement:
    """Monic gcd of two polynomials; ``gcd(a, 0)`` is ``monic(a)``."""
    a, b = unify(a, b)
    if not a and not b:
        return a
    if not b:
        return _shrink(_monic(a))
    if not a:
        return _shrink(_monic(b))
    return _shrink(_monic(a.gcd(b)))


class RatFunc:
    """Element of Q(vars): reduced fraction with monic denominator."""

    __slots__ = ("num", "den", "_hash", "_compiled")

    def __init__(self, num: PolyElement, den: PolyElement, *, _normal: bool = False):
        if not _normal:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None
        self._compiled = None

    # constructors -----------------------------------------------------
    @classmethod
    def const(cls, value: Number) -> "RatFunc":
        r = poly_ring(())
        return cls(r(_qq(Fraction(value))), r.one, _normal=True)

    @classmethod
    def var(cls, name: str) -> "RatFunc":
        r = poly_ring((name,))
        return cls(r.gens[0], r.one, _normal=True)

    @classmethod
    def from_poly(cls, p: PolyElement) -> "RatFunc":
        return cls(p, p.ring.one)

    @classmethod
    def coerce(cls, value) -> "RatFunc":
        if isinstance(value, RatFunc):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.const(value)
        if isinstance(value, PolyElement):
            return cls.from_poly(value)
        raise TypeError(f"cannot coerce {type(value).__name__} to RatFunc")

    # inspection -------------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        return _sorted_names(_used(self.num) | _used(self.den))

    def is_zero(self) -> bool:
        return not self.num

    def is_const(self) -> bool:
        return not self.variables

    def is_poly(self) -> bool:
        return self.den.is_ground

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise AlgebraError(f"{self} is not constant")
        return to_fraction(self.num.LC if self.num else 0) / to_fraction(self.den.LC)

    def depends_on(self, name: str) -> bool:
        return name in self.variables

    def degree(self, name: str) -> int:
        """Degree of the numerator in ``name`` (-1 for zero)."""
        if not self.num:
            return -1
        return _degree(self.num, name)

    def den_degree(self, name: str) -> int:
        return _degree(self.den, name)

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        a, b, c, d = unify(self.num, self.den, other.num, other.den)
        if b == d:
            return RatFunc(a + c, b)
        return RatFunc(a * d + c * b, b * d)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _normal=True)

    def __sub__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return ZERO
        a, b, c, d = unify(self.num, self.den, other.num, other.den)
        return RatFunc(a * c, b * d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        a, b, c, d = unify(self.num, self.den, other.num, other.den)
        return RatFunc(a * d, b * c)

    def __rtruediv__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e >= 0:
            return RatFunc(self.num**e, self.den**e, _normal=True) if e else ONE
        if self.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        return RatFunc(self.den ** (-e), self.num ** (-e))

    # equality ---------------------------------------------------------
    def __eq__(self, other):
        other = _maybe(other)
        if other is NotImplemented:
            return False
        return self.num == other.num and self.den == other.den and self.num.ring == other.num.ring

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((tuple(sorted(self.num.items())), tuple(sorted(self.den.items())),
                               tuple(map(str, self.num.ring.symbols))))
        return self._hash

    # substitution -----------------------------------------------------
    def shift(self, name: str, m: int) -> "RatFunc":
        """Substitute ``name -> name + m``."""
        if m == 0 or name not in self.variables:
            return self
        num, den = unify(self.num, self.den)
        x = num.ring.gens[[str(s) for s in num.ring.symbols].index(name)]
        return RatFunc(num.compose(x, x + m), den.compose(x, x + m))

    def rename(self, old: str, new: str) -> "RatFunc":
        if old == new or old not in self.variables:
            return self
        if new in self.variables:
            return self.subs({old: RatFunc.var(new)})
        names = list(self.variables)
        renamed = [new if s == old else s for s in names]
        order = _sorted_names(renamed)
        target = poly_ring(order)
        perm = [order.index(s) for s in renamed]

        def move(p):
            p = lift(p, names)
            out = target.zero.copy()
            for monom, coeff in p.iterterms():
                new_m = [0] * len(order)
                for i, e in enumerate(monom):
                    new_m[perm[i]] = e
                out[tuple(new_m)] = coeff
            return out

        return RatFunc(move(self.num), move(self.den), _normal=True)

    def subs(self, mapping: Mapping[str, "RatFunc | Number"]) -> "RatFunc":
        """Simultaneous substitution of variables by rational functions."""
        mapping = {k: v for k, v in mapping.items() if k in self.variables}
        if not mapping:
            return self
        if all(isinstance(v, (int, Fraction)) for v in mapping.values()):
            return self._subs_const(mapping)
        values = {k: RatFunc.coerce(v) for k, v in mapping.items()}
        return _poly_subs(self.num, values) / _poly_subs(self.den, values)

    def _subs_const(self, mapping: Mapping[str, Number]) -> "RatFunc":
        num, den = unify(self.num, self.den)
        syms = [str(s) for s in num.ring.symbols]
        pairs = [(num.ring.gens[syms.index(k)], _qq(Fraction(v))) for k, v in mapping.items()]
        n2, d2 = num.subs(pairs), den.subs(pairs)
        if not d2:
            raise ZeroDivisionError("division by zero polynomial")
        return RatFunc(n2, d2)

    def coefficients_in(self, name: str) -> list["RatFunc"]:
        """Coefficients of a polynomial (in ``name``) from degree 0 upwards."""
        if name in _used(self.den):
            raise AlgebraError(f"{self} is not polynomial in {name}")
        if not self.num:
            return []
        num = self.num
        syms = [str(s) for s in num.ring.symbols]
        if name not in syms:
            return [self]
        i = syms.index(name)
        buckets: dict[int, PolyElement] = {}
        for monom, coeff in num.iterterms():
            d = monom[i]
            m = list(monom)
            m[i] = 0
            buckets.setdefault(d, num.ring.zero.copy())[tuple(m)] = coeff
        top = max(buckets)
        return [RatFunc(buckets[d], self.den) if d in buckets else ZERO for d in range(top + 1)]

    # numeric evaluation -----------------------------------------------
    def evaluate(self, point: Mapping[str, Number]) -> Fraction:
        """Exact value at ``point``; 0 when the denominator vanishes."""
        if self._compiled is None:
            self._compiled = (_compile(self.num), _compile(self.den))
        cnum, cden = self._compiled
        d = _run(cden, point)
        if d == 0:
            return Fraction(0)
        return _run(cnum, point) / d

    # printing ---------------------------------------------------------
    def __repr__(self):
        return f"RatFunc({self})"

    def __str__(self):
        num = poly_str(self.num)
        if self.is_poly():
            return num
        den = poly_str(self.den)
        if len(self.num) > 1:
            num = f"({num})"
        if len(self.den) > 1 or not _is_single_var(self.den):
            den = f"({den})"
        return f"{num}/{den}"


def _is_single_var(p: PolyElement) -> bool:
    if len(p) != 1:
        return False
    (monom, coeff), = p.iterterms()
    return coeff == 1 and sum(monom) == 1


def _degree(p: PolyElement, name: str) -> int:
    syms = [str(s) for s in p.ring.symbols]
    if not p:
        return -1
    if name not in syms:
        return 0
    return p.degree(p.ring.gens[syms.index(name)])


def _maybe(x):
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, (int, Fraction)):
        return RatFunc.const(x)
    return NotImplemented


def _normalize(num: PolyElement, den: PolyElement) -> tuple[PolyElement, PolyElement]:
    num, den = unify(num, den)
    if not den:
        raise ZeroDivisionError("division by zero polynomial")
    if not num:
        r = poly_ring(())
        return r.zero, r.one
    if not den.is_ground:
        num, den = num.cancel(den)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return _shrink(num), _shrink(den)


def _poly_subs(p: PolyElement, values: Mapping[str, RatFunc]) -> RatFunc:
    syms = [str(s) for s in p.ring.symbols]
    result = ZERO
    cache: dict[tuple[int, int], RatFunc] = {}
    for monom, coeff in p.iterterms():
        term = RatFunc.const(to_fraction(coeff))
        rest = [0] * len(monom)
        for i, e in enumerate(monom):
            if not e:
                continue
            if syms[i] in values:
                key = (i, e)
                if key not in cache:
                    cache[key] = values[syms[i]] ** e
                term = term * cache[key]
            else:
                rest[i] = e
        if any(rest):
            mono = p.ring.zero.copy()
            mono[tuple(rest)] = QQ(1)
            term = term * RatFunc.from_poly(mono)
        result = result + term
    return result


def _compile(p: PolyElement):
    syms = [str(s) for s in p.ring.symbols]
    terms = []
    for monom, coeff in p.iterterms():
        terms.append((to_fraction(coeff), tuple((syms[i], e) for i, e in enumerate(monom) if e)))
    return terms


def _run(terms, point: Mapping[str, Number]) -> Fraction:
    total = Fraction(0)
    for coeff, powers in terms:
        value = coeff
        for name, e in powers:
            try:
                value *= Fraction(point[name]) ** e
            except KeyError:
                raise AlgebraError(f"unbound variable {name}") from None
        total += value
    return total


def poly_str(p: PolyElement) -> str:
    """Plain, re-parseable rendering of a polynomial in graded-lex order."""
    if not p:
        return "0"
    syms = [str(s) for s in p.ring.symbols]
    parts = []
    for monom, coeff in sorted(p.iterterms(), key=lambda t: (sum(t[0]), t[0]), reverse=True):
        c = to_fraction(coeff)
        factors = []
        for name, e in zip(syms, monom):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if factors:
            body = "*".join(factors)
            if c != 1:
                body = f"{_frac_str(c)}*{body}"
        else:
            body = _frac_str(c)
        parts.append((sign, body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f"{sign}{body}"
    return out


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


ZERO = RatFunc.const(0)
ONE = RatFunc.const(1)


def normalize_ratfunc(num: PolyElement, den: PolyElement) -> RatFunc:
    return RatFunc(num, den)


def eval_rat(f: RatFunc, point: Mapping[str, Number]) -> Fraction:
    """Evaluate ``f`` exactly; a vanishing denominator yields 0."""
    return f.evaluate(point)


@dataclass(frozen=True)
class LinearSolution:
    """Affine solution space ``particular + span(nullspace)``."""

    particular: tuple[RatFunc, ...]
    nullspace: tuple[tuple[RatFunc, ...], ...]


def solve_linear_system(matrix: Sequence[Sequence], rhs: Sequence) -> LinearSolution | None:
    """Solve ``matrix @ x = rhs`` over the field of rational functions.

    Gauss-Jordan elimination with normalized entries; returns ``None`` when
    the system is inconsistent.
    """
    rows = [[RatFunc.coerce(v) for v in row] + [RatFunc.coerce(b)] for row, b in zip(matrix, rhs)]
    if len(rows) != len(rhs):
        raise ValueError("matrix and rhs have different lengths")
    ncols = len(matrix[0]) if matrix else 0
    for row in rows:
        if len(row) != ncols + 1:
            raise ValueError("ragged matrix")
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        candidates = [i for i in range(r, len(rows)) if not rows[i][col].is_zero()]
        if not candidates:
            continue
        best = min(candidates, key=lambda i: _weight(rows[i][col]))
        rows[r], rows[best] = rows[best], rows[r]
        inv = ONE / rows[r][col]
        rows[r] = [v * inv if not v.is_zero() else v for v in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][col].is_zero():
                f = rows[i][col]
                rows[i] = [a - f * b if not b.is_zero() else a for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    for i in range(r, len(rows)):
        if not rows[i][ncols].is_zero():
            return None
    particular = [ZERO] * ncols
    for i, col in enumerate(pivots):
        particular[col] = rows[i][ncols]
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [ZERO] * ncols
        vec[f] = ONE
        for i, col in enumerate(pivots):
            vec[col] = -rows[i][f]
        basis.append(tuple(vec))
    return LinearSolution(tuple(particular), tuple(basis))


def _weight(f: RatFunc) -> tuple[int, int]:
    return (len(f.num) + len(f.den), f.num.ring.ngens)
