"""Telescoping solvers over Q(params)(k).

The core is Gosper's algorithm in its classical form (GP normal form, degree
bound, linear system).  Unknown constants c_i simply add columns to the
linear system, which gives parameterized telescoping.  Towers are handled
component-wise over Π/sign monomials, and one Σ-generator layer is solved by
top-down coefficient comparison with every level dispatched to the
parameterized solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

from .algebra import ONE, ZERO, RatFunc, lift, poly_gcd, poly_ring, solve_linear_system, to_fraction
from .diffring import PI, SIGMA, SIGN, Tower, TowerElem, apply_sigma, from_expression, to_expression
from .errors import UnsupportedError
from .expr import Expr, _integer_roots

__all__ = [
    "TeleProblem",
    "TeleSolution",
    "TowerSolution",
    "gosper",
    "extended_gosper",
    "param_telescope",
    "tower_telescope",
    "sigma_layer_telescope",
    "telescope_pieces",
    "gp_form",
]


@dataclass(frozen=True)
class TeleProblem:
    """Summand (Σ_i c_i p_i(k)) t(k) with t(k+1)/t(k) = ratio and c_0 = 1."""

    ratio: RatFunc
    pieces: tuple[RatFunc, ...]
    var: str = "k"


@dataclass(frozen=True)
class TeleSolution:
    """Constants c_1.. and certificate R such that g = R t telescopes the summand."""

    constants: tuple[RatFunc, ...]
    certificate: RatFunc
    additive: RatFunc = ZERO
    threshold: int = 0


@dataclass(frozen=True)
class TowerSolution:
    constants: tuple[RatFunc, ...]
    g: TowerElem
    free_dimension: int = 0


# ---------------------------------------------------------------------------
# polynomial helpers (polynomials in k are RatFuncs whose denominator is free of k)


def _k_coeffs(f: RatFunc, k: str) -> list[RatFunc]:
    return f.coefficients_in(k)


def _k_degree(f: RatFunc, k: str) -> int:
    return len(_k_coeffs(f, k)) - 1


def _k_content(p, k: str):
    """Content of a polynomial (PolyElement) viewed in Q[params][k]."""
    f = RatFunc.from_poly(p)
    coeffs = [c.num for c in _k_coeffs(f, k) if not c.is_zero()]
    g = coeffs[0]
    for c in coeffs[1:]:
        g = poly_gcd(g, c)
    return g


def _shift_poly(p, k: str, m: int):
    f = RatFunc.from_poly(p).shift(k, m)
    return f.num


def _pquo(a, b):
    """Exact quotient of polynomials from possibly different rings."""
    q = RatFunc.from_poly(a) / RatFunc.from_poly(b)
    if not q.is_poly():
        raise ArithmeticError("inexact polynomial division")
    return q.num.quo_ground(q.den.LC) if q.den.LC != 1 else q.num


def _nonneg_integer_shifts(A, B, k: str) -> list[int]:
    """Nonnegative integers h with deg gcd(A(k), B(k+h)) > 0, generically in the parameters."""
    names = sorted((set(map(str, A.ring.symbols)) | set(map(str, B.ring.symbols))) - {"_", k})
    ring_names = (k, "_h", *names)
    ring = poly_ring(ring_names)
    a = lift(A, ring_names)
    b = lift(B, ring_names)
    kk, hh = ring.gens[0], ring.gens[1]
    if a.degree(kk) <= 0 or b.degree(kk) <= 0:
        return []
    bh = b.compose(kk, kk + hh)
    res = a.resultant(bh)
    if not res:
        return []
    # Collect the univariate-in-h coefficient of every parameter monomial.
    buckets: dict[tuple, dict[int, Fraction]] = {}
    # sympy drops the eliminated generator from the resultant's ring.
    start = len(ring_names) - len(res.ring.symbols)
    h_at = 1 - start
    for monom, coeff in res.iterterms():
        key = monom[h_at + 1:]
        buckets.setdefault(key, {})[monom[h_at]] = to_fraction(coeff)
    common = None
    for bucket in buckets.values():
        top = max(bucket)
        coeffs = [bucket.get(i, Fraction(0)) for i in range(top + 1)]
        common = coeffs if common is None else _uni_gcd(common, coeffs)
    return sorted(h for h in set(_integer_roots(list(common))) if h >= 0)


def _uni_gcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    def trim(p):
        p = list(p)
        while p and p[-1] == 0:
            p.pop()
        return p

    a, b = trim(a), trim(b)
    while b:
        r = list(a)
        while len(r) >= len(b) and r:
            f = r[-1] / b[-1]
            shift = len(r) - len(b)
            for i, c in enumerate(b):
                r[i + shift] -= f * c
            r = trim(r)
        a, b = b, r
    return a


def gp_form(ratio: RatFunc, k: str = "k") -> tuple[RatFunc, RatFunc, RatFunc, RatFunc]:
    """Gosper-Petkovšek form: ratio = Z (A/B) C(k+1)/C(k).

    gcd(A(k), B(k+h)) = 1 for all h >= 0, gcd(A, C) = gcd(B, C(k+1)) = 1;
    Z is free of k.
    """
    if ratio.is_zero():
        raise ValueError("degenerate ratio with zero numerator")
    num, den = ratio.num, ratio.den
    cn, cd = _k_content(num, k), _k_content(den, k)
    Z = RatFunc.from_poly(cn) / RatFunc.from_poly(cd)
    A = _pquo(num, cn)
    B = _pquo(den, cd)
    C = poly_ring(()).one
    for h in _nonneg_integer_shifts(A, B, k):
        d = poly_gcd(A, _shift_poly(B, k, h))
        if _k_degree(RatFunc.from_poly(d), k) <= 0:
            continue
        A = _pquo(A, d)
        B = _pquo(B, _shift_poly(d, k, -h))
        for i in range(1, h + 1):
            C = (RatFunc.from_poly(C) * RatFunc.from_poly(_shift_poly(d, k, -i))).num
    return Z, RatFunc.from_poly(A), RatFunc.from_poly(B), RatFunc.from_poly(C)


# ---------------------------------------------------------------------------
# one hypergeometric component of a (joint) Gosper system


class _Component:
    """Gosper system for y(k+1) r(k) - y(k) = Σ_i κ_i p_i(k), κ_0 = 1."""

    def __init__(self, ratio: RatFunc, pieces: Sequence[RatFunc], k: str):
        self.k = k
        dens = [p.den for p in pieces if not p.is_zero()]
        Q = RatFunc.const(1)
        for d in dens:
            dq = RatFunc.from_poly(d)
            g = RatFunc.from_poly(poly_gcd(Q.num, d))
            Q = Q * dq / g
        self.Q = Q
        scaled = [p * Q for p in pieces]
        ratio_u = ratio * Q / Q.shift(k, 1)
        Z, A, B, C = gp_form(ratio_u, k)
        self.B1 = B.shift(k, -1)
        self.C = C
        alpha = Z * A
        beta = self.B1
        self.rhs = [C * p for p in scaled]
        rhs_deg = max((_k_degree(p, k) for p in self.rhs if not p.is_zero()), default=-1)
        da, db = _k_degree(alpha, k), _k_degree(beta, k)
        la, lb = _k_coeffs(alpha, k)[-1], _k_coeffs(beta, k)[-1]
        if da != db or la != lb:
            d = rhs_deg - max(da, db)
        else:
            n = da
            cands = [rhs_deg - n + 1]
            if n >= 1:
                ca, cb = _k_coeffs(alpha, k), _k_coeffs(beta, k)
                cand = (cb[n - 1] - ca[n - 1]) / la
                if cand.is_const():
                    v = cand.const_value()
                    if v.denominator == 1 and v >= 0:
                        cands.append(int(v))
            d = max(cands)
        self.degree = d
        kk = RatFunc.var(k)
        self.columns = [alpha * (kk + 1) ** j - beta * kk**j for j in range(max(d, -1) + 1)]

    @property
    def nx(self) -> int:
        return len(self.columns)

    def rows(self, x_offset: int, kappa_offset: int, nunknowns: int):
        polys = {x_offset + j: c for j, c in enumerate(self.columns)}
        for i, p in enumerate(self.rhs[1:]):
            polys[kappa_offset + i] = -p
        coeffs = {col: _k_coeffs(p, self.k) for col, p in polys.items() if not p.is_zero()}
        rhs = _k_coeffs(self.rhs[0], self.k) if not self.rhs[0].is_zero() else []
        height = max([len(c) for c in coeffs.values()] + [len(rhs)] + [0])
        out = []
        for r in range(height):
            row = [ZERO] * nunknowns
            for col, cs in coeffs.items():
                if r < len(cs):
                    row[col] = cs[r]
            out.append((row, rhs[r] if r < len(rhs) else ZERO))
        return out

    def decode(self, xs: Sequence[RatFunc]) -> RatFunc:
        kk = RatFunc.var(self.k)
        x = ZERO
        for j, c in enumerate(xs):
            if not c.is_zero():
                x = x + c * kk**j
        if x.is_zero():
            return ZERO
        return self.B1 * x / self.C / self.Q


@dataclass
class _Space:
    """Affine solution space of a joint system: particular + span(basis)."""

    particular: tuple[tuple[RatFunc, ...], dict]
    basis: list[tuple[tuple[RatFunc, ...], dict]]


def _joint_space(components: dict, nkappa: int) -> _Space | None:
    """Solve all components simultaneously; kappa columns are shared and placed last."""
    comps = list(components.items())
    offsets = []
    total = 0
    for _, comp in comps:
        offsets.append(total)
        total += comp.nx
    nunk = total + nkappa
    matrix, rhs = [], []
    for (key, comp), off in zip(comps, offsets):
        for row, b in comp.rows(off, total, nunk):
            matrix.append(row)
            rhs.append(b)
    if nunk == 0:
        if any(not b.is_zero() for b in rhs):
            return None
        return _Space(((), {key: ZERO for key, _ in comps}), [])
    if not matrix:
        matrix = [[ZERO] * nunk]
        rhs = [ZERO]
    sol = solve_linear_system(matrix, rhs)
    if sol is None:
        return None

    def decode(vec):
        gs = {}
        for (key, comp), off in zip(comps, offsets):
            gs[key] = comp.decode(vec[off:off + comp.nx])
        return tuple(vec[total:]), gs

    return _Space(decode(sol.particular), [decode(v) for v in sol.nullspace])


# ---------------------------------------------------------------------------
# single-kernel solvers


def _check(problem: TeleProblem, sol: TeleSolution) -> None:
    k = problem.var
    R = sol.certificate
    lhs = R.shift(k, 1) * problem.ratio - R
    rhs = problem.pieces[0]
    for c, p in zip(sol.constants, problem.pieces[1:]):
        rhs = rhs + c * p
    if lhs != rhs:
        raise AssertionError("telescoping certificate failed verification")


def param_telescope(problem: TeleProblem) -> TeleSolution | None:
    """Solve R(k+1) r(k) - R(k) = p_0 + Σ c_i p_i for R and the constants c_i.

    Among all solutions the one with every free coordinate set to zero is
    returned, which fixes the additive telescoping constant to 0.
    """
    if problem.ratio.is_zero():
        raise ValueError("degenerate ratio with zero numerator")
    comp = _Component(problem.ratio, problem.pieces, problem.var)
    space = _joint_space({0: comp}, len(problem.pieces) - 1)
    if space is None:
        return None
    consts, gs = space.particular
    sol = TeleSolution(consts, gs[0], threshold=_threshold_of(gs[0], problem))
    _check(problem, sol)
    return sol


def _threshold_of(R: RatFunc, problem: TeleProblem) -> int:
    from .expr import _threshold

    k = problem.var
    return max(_threshold(R if not R.is_zero() else ONE, k), _threshold(problem.ratio, k))


def gosper(ratio: RatFunc, var: str = "k") -> TeleSolution | None:
    """Certificate R with R(k+1) r(k) - R(k) = 1, i.e. g = R t sums t."""
    return param_telescope(TeleProblem(ratio, (ONE,), var))


def extended_gosper(ratio: RatFunc, m: int, var: str = "k") -> tuple[RatFunc, TeleSolution] | None:
    """Nonzero p of least degree <= m such that p(k) t(k) telescopes.

    The p returned has its lowest nonvanishing k-coefficient monic.
    """
    if ratio.is_zero():
        raise ValueError("degenerate ratio with zero numerator")
    kk = RatFunc.var(var)
    for deg in range(m + 1):
        pieces = (ZERO,) + tuple(kk**j for j in range(deg + 1))
        comp = _Component(ratio, pieces, var)
        space = _joint_space({0: comp}, deg + 1)
        if space is None:
            continue
        for consts, gs in space.basis:
            if all(c.is_zero() for c in consts):
                continue
            low = next(c for c in consts if not c.is_zero())
            lead = RatFunc.from_poly(low.num)
            lc = to_fraction(low.num.LC)
            scale = lead / low / lc
            consts = tuple(c * scale for c in consts)
            p = sum((c * kk**j for j, c in enumerate(consts)), ZERO)
            sol = TeleSolution((), gs[0] * scale)
            _check(TeleProblem(ratio, (p,), var), sol)
            return p, sol
    return None


# ---------------------------------------------------------------------------
# towers


def _monomial_ratio(tower: Tower, mono: tuple[int, ...]) -> RatFunc:
    r = ONE
    for ext, e in zip(tower.exts, mono):
        if not e:
            continue
        if ext.kind == PI:
            r = r * ext.alpha**e
        elif ext.kind == SIGN:
            r = r * (-1) ** e
        else:
            raise UnsupportedError("Σ-generator inside a hypergeometric component")
    return r


def _base_space(pieces: Sequence[TowerElem], tower: Tower) -> _Space | None:
    """Parameterized telescoping over the Π/sign part of ``tower``."""
    zero = (0,) * len(tower)
    monos = {zero}
    for p in pieces:
        monos |= set(p.lift(tower).terms)
    components = {}
    for mono in sorted(monos):
        coeffs = [p.lift(tower).terms.get(mono, ZERO) for p in pieces]
        components[mono] = _Component(_monomial_ratio(tower, mono), coeffs, tower.var)
    space = _joint_space(components, len(pieces) - 1)
    if space is None:
        return None

    def as_elem(entry):
        consts, gs = entry
        return consts, TowerElem(tower, {m: g for m, g in gs.items()})

    return _Space(as_elem(space.particular), [as_elem(b) for b in space.basis])


def _affine_combine(vec: Sequence, params: Sequence[RatFunc], base):
    """base + Σ params[l] vec[l+1]."""
    out = base
    for p, v in zip(params, vec[1:]):
        if not p.is_zero():
            out = out + v * p
    return out


def tower_telescope(pieces: Sequence[TowerElem], tower: Tower | None = None) -> TowerSolution | None:
    """Solve σ(g) - g = p_0 + Σ_{i>=1} c_i p_i in ``tower``.

    Pieces may be polynomial in one Σ-generator s; the ansatz has s-degree at
    most one more than the pieces.  Free coordinates of the solution space
    are set to zero.
    """
    tower = tower or pieces[0].tower
    pieces = [p.lift(tower) for p in pieces]
    sig = tower.sigma_gens()
    for i in sig:
        beta = tower.exts[i].beta.lift(tower)
        if any(beta.involves(j) for j in sig):
            raise UnsupportedError("nested Σ-generators are outside the supported solver scope")
    involved = [i for i in sig if any(p.involves(i) for p in pieces)]
    if len(involved) > 1:
        raise UnsupportedError("summands involving several Σ-generators are not supported")
    s = involved[0] if involved else None
    nconst = len(pieces) - 1
    zero_elem = tower.const(0)

    if s is None:
        degree = -1
    else:
        degree = max(p.degree_in(s) for p in pieces)
    others = [i for i in sig if i != s]

    # State: constants c_j and coefficients g_m are affine in the current free
    # parameters λ_1..λ_L; stored as lists [constant, coeff(λ_1), ...].
    L = nconst
    C = [[ZERO] + [ONE if l == j else ZERO for l in range(L)] for j in range(nconst)]
    G: dict[int, list[TowerElem]] = {}
    beta_s = tower.exts[s].beta.lift(tower) if s is not None else None
    top = degree + 1 if s is not None else 0

    for m in range(top, -1, -1):
        def level_coeff(p):
            return p.coeff_in(s, m) if s is not None else p

        parts = [level_coeff(p) for p in pieces]
        rhs = [parts[0]] + [zero_elem] * L
        for j in range(nconst):
            for l in range(L + 1):
                if not C[j][l].is_zero():
                    rhs[l] = rhs[l] + parts[j + 1] * C[j][l]
        for i in range(m + 1, top + 1):
            factor = beta_s ** (i - m) * comb(i, m)
            for l in range(L + 1):
                if not G[i][l].is_zero():
                    rhs[l] = rhs[l] - apply_sigma(G[i][l], tower) * factor
        extras = others if m == 0 else []
        base_pieces = rhs + [-tower.exts[t].beta.lift(tower) for t in extras]
        space = _base_space(base_pieces, tower)
        if space is None:
            return None

        def embed(entry):
            consts, g = entry
            for t, d in zip(extras, consts[L:]):
                if not d.is_zero():
                    g = g + tower.gen(t) * d
            return consts[:L], g

        p_consts, p_g = embed(space.particular)
        basis = [embed(b) for b in space.basis]
        # Re-parametrize: λ = p_consts + Σ_q μ_q b_consts[q].
        Q = len(basis)

        def reparam(vec):
            zero = vec[0] * 0
            new = [_affine_combine(vec, p_consts, vec[0])]
            new.extend(_affine_combine(vec, b_consts, zero) for b_consts, _ in basis)
            return new

        C = [reparam(c) for c in C]
        for i in G:
            G[i] = reparam(G[i])
        G[m] = [p_g] + [g for _, g in basis]
        L = Q

    constants = tuple(c[0] for c in C)
    g = zero_elem
    for m, vec in G.items():
        coeff = vec[0]
        g = g + (coeff * tower.gen(s) ** m if (s is not None and m) else coeff)
    sol = TowerSolution(constants, g, L)
    _check_tower(pieces, sol, tower)
    return sol


def _check_tower(pieces, sol: TowerSolution, tower: Tower) -> None:
    rhs = pieces[0]
    for c, p in zip(sol.constants, pieces[1:]):
        rhs = rhs + p * c
    if apply_sigma(sol.g, tower) - sol.g != rhs:
        raise AssertionError("tower telescoping solution failed verification")


def sigma_layer_telescope(f: TowerElem, tower: Tower | None = None) -> TowerElem | None:
    """g with σ(g) - g = f and deg_s(g) <= deg_s(f) + 1, or None."""
    sol = tower_telescope([f], tower or f.tower)
    return None if sol is None else sol.g


@dataclass(frozen=True)
class PiecesResult:
    constants: tuple[RatFunc, ...]
    g: Expr
    tower: Tower
    element: TowerElem


def telescope_pieces(pieces: Sequence[Expr], var: str = "k") -> PiecesResult | None:
    """Parameterized telescoping for expression pieces sharing a tower.

    Solves g(k+1) - g(k) = P_0 + Σ_{i>=1} c_i P_i and returns the constants
    and g rewritten as an expression.
    """
    tower = None
    elems = []
    for p in pieces:
        tower, e = from_expression(p, var, tower)
        elems.append(e)
    elems = [e.lift(tower) for e in elems]
    sol = tower_telescope(elems, tower)
    if sol is None:
        return None
    return PiecesResult(sol.constants, to_expression(sol.g, tower), tower, sol.g)
