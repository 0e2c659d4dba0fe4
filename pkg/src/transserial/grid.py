"""Ratio sets, grids, and the certified dominance relations.

Membership in the monoid generated by a ratio set is decided exactly:
monomials are mapped to exponent vectors by taking logarithms over the
session atom registry, the linear system is solved over Q, and integer
solutions come from a Hermite-style column reduction.  When the
generators are multiplicatively dependent the leftover lattice is
enumerated with Fourier-Motzkin bounds under a node budget.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from math import ceil, floor, gcd

from . import config
from .certificates import Checked, Failed, Proven, Unknown, proven
from .errors import BudgetExhausted, EmptyInput, KernelBug, NotInGrid
from .monomial import (
    EQ,
    GT,
    LT,
    ONE,
    Monomial,
    is_small,
    mono_cmp,
    mono_inv,
    mono_log,
    mono_max,
    mono_mul,
    mono_pow,
    mono_sign,
    mono_text,
)
from .rationals import Const, QZERO


# ---------------------------------------------------------------------------
# ratio sets and grids

class RatioSet:
    """Finite set of small monomials, kept sorted decreasing."""

    __slots__ = ("monos",)

    def __init__(self, monos: tuple):
        self.monos = monos

    @classmethod
    def from_monomials(cls, monos) -> "RatioSet":
        uniq = []
        seen = set()
        for m in monos:
            if m in seen:
                continue
            if mono_sign(m) >= 0:
                raise KernelBug(f"ratio set element {m} is not small")
            seen.add(m)
            uniq.append(m)
        uniq.sort(key=cmp_to_key(mono_cmp), reverse=True)
        return cls(tuple(uniq))

    def union(self, other: "RatioSet") -> "RatioSet":
        if not other.monos:
            return self
        if not self.monos:
            return other
        return RatioSet.from_monomials(self.monos + other.monos)

    def __len__(self):
        return len(self.monos)

    def __iter__(self):
        return iter(self.monos)

    def __contains__(self, m):
        return m in set(self.monos)

    def __eq__(self, other):
        return isinstance(other, RatioSet) and self.monos == other.monos

    def __hash__(self):
        return hash(self.monos)

    def text(self) -> str:
        return "{" + ", ".join(mono_text(m, dump=True) for m in self.monos) + "}"

    def __repr__(self):
        return f"<ratios {self.text()}>"


@dataclass(frozen=True)
class Grid:
    """J^{μ,m} = μ^m · μ*; base aligned with the ratio order."""

    ratios: RatioSet
    base: tuple

    @classmethod
    def empty(cls) -> "Grid":
        return cls(RatioSet(()), ())

    @classmethod
    def monoid(cls, ratios: RatioSet) -> "Grid":
        return cls(ratios, (0,) * len(ratios))

    def shift(self, delta: tuple) -> "Grid":
        return Grid(self.ratios, tuple(b + d for b, d in zip(self.base, delta)))

    def base_monomial(self) -> Monomial:
        out = ONE
        for m, k in zip(self.ratios, self.base):
            out = mono_mul(out, mono_pow(m, Fraction(k)))
        return out

    def text(self) -> str:
        rats = ", ".join(mono_text(m, dump=True) for m in self.ratios)
        base = ", ".join(str(b) for b in self.base)
        return f"grid{{ratios=[{rats}], base=[{base}]}}"

    def __repr__(self):
        return f"<{self.text()}>"


@dataclass(frozen=True)
class Member:
    exponents: tuple


@dataclass(frozen=True)
class NotMember:
    reason: str = ""


@dataclass(frozen=True)
class UnknownMembership:
    reason: str = "budget"


# ---------------------------------------------------------------------------
# exponent vectors over the atom registry

_vec_cache: dict = {}
_member_cache: dict = {}
_lock = threading.Lock()


def _const_coords(c: Const) -> dict:
    if isinstance(c, Fraction):
        return {1: c}
    import sympy as sp

    expr = sp.expand(c)
    num, den = sp.fraction(sp.cancel(expr))
    if not den.is_Rational:
        raise BudgetExhausted("symbolic coefficient outside the polynomial fragment")
    out = {}
    for term in sp.Add.make_args(sp.expand(num / den)):
        coeff, rest = term.as_coeff_Mul()
        if not coeff.is_Rational:
            raise BudgetExhausted("non-rational coordinate in exponent vector")
        key = 1 if rest == 1 else sp.srepr(rest)
        out[key] = out.get(key, QZERO) + Fraction(coeff.p, coeff.q)
    return out


def _log_vector(m: Monomial) -> dict:
    """log m as coordinates {(basis monomial, const atom): Fraction}."""
    cached = _vec_cache.get(m)
    if cached is not None:
        return cached
    from . import series as srs

    logm = mono_log(m)
    terms = srs.force_all(logm, config.DEFAULT_TERMS * 4)
    vec: dict = {}
    for mono, coeff in terms:
        for atom, q in _const_coords(coeff).items():
            key = (mono, atom)
            vec[key] = vec.get(key, QZERO) + q
    vec = {k: v for k, v in vec.items() if v != 0}
    with _lock:
        _vec_cache[m] = vec
    return vec


def monoid_member(r: Monomial, ratios: RatioSet, strict: bool = False,
                  node_budget: int | None = None):
    """Decide r ∈ μ* (μ⁺ when strict) exactly."""
    key = (r, ratios, strict)
    hit = _member_cache.get(key)
    if hit is not None:
        return hit
    out = _monoid_member(r, ratios, strict,
                         config.NODE_BUDGET if node_budget is None else node_budget)
    with _lock:
        _member_cache[key] = out
    return out


def _monoid_member(r: Monomial, ratios: RatioSet, strict: bool, node_budget: int):
    n = len(ratios)
    if r is ONE:
        if strict:
            return NotMember("only the empty word evaluates to 1")
        return Member((0,) * n)
    if n == 0:
        return NotMember("empty ratio set generates only 1")
    if mono_sign(r) > 0:
        return NotMember("large monomials never lie in a small monoid")
    try:
        vr = _log_vector(r)
        cols = [_log_vector(m) for m in ratios]
    except BudgetExhausted:
        return UnknownMembership("lazy exponent series did not terminate")
    keys = sorted(set(vr) | set().union(*cols) if cols else set(vr),
                  key=lambda k: repr(k))
    rows = []
    target = []
    denom = 1
    for k in keys:
        row = [col.get(k, QZERO) for col in cols]
        rows.append(row)
        target.append(vr.get(k, QZERO))
    for row, t in zip(rows, target):
        for q in row:
            denom = denom * q.denominator // gcd(denom, q.denominator)
        denom = denom * t.denominator // gcd(denom, t.denominator)
    A = [[int(q * denom) for q in row] for row in rows]
    v = [int(t * denom) for t in target]
    solved = _solve_integer(A, v, n)
    if solved is None:
        return NotMember("no integer exponent solution")
    k0, lattice = solved
    if not lattice:
        if all(x >= 0 for x in k0) and (not strict or any(k0)):
            return Member(tuple(k0))
        return NotMember("unique exponent solution is not admissible")
    for w in lattice:
        if all(x >= 0 for x in w) and any(w):
            return UnknownMembership("degenerate relation among generators")
        if all(x <= 0 for x in w) and any(w):
            return UnknownMembership("degenerate relation among generators")
    found = _search_nonnegative(k0, lattice, strict, node_budget)
    if found is None:
        return NotMember("lattice search exhausted with no admissible solution")
    if found == "budget":
        return UnknownMembership("lattice enumeration exceeded the node budget")
    return Member(tuple(found))


def _solve_integer(A, v, n):
    """All integer solutions of A k = v: (particular, lattice basis) or None."""
    m = len(A)
    H = [list(row) for row in A]
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def colop_swap(j1, j2):
        for r in range(m):
            H[r][j1], H[r][j2] = H[r][j2], H[r][j1]
        for r in range(n):
            U[r][j1], U[r][j2] = U[r][j2], U[r][j1]

    def colop_addmul(jdst, jsrc, q):
        for r in range(m):
            H[r][jdst] += q * H[r][jsrc]
        for r in range(n):
            U[r][jdst] += q * U[r][jsrc]

    pivot_col = 0
    pivots = []
    for row in range(m):
        if pivot_col >= n:
            pivots.append(None)
            continue
        j = pivot_col
        while True:
            nonzero = [jj for jj in range(pivot_col, n) if H[row][jj] != 0]
            if not nonzero:
                pivots.append(None)
                break
            jmin = min(nonzero, key=lambda jj: abs(H[row][jj]))
            if jmin != pivot_col:
                colop_swap(pivot_col, jmin)
            done = True
            for jj in range(pivot_col + 1, n):
                if H[row][jj] != 0:
                    q = H[row][jj] // H[row][pivot_col]
                    colop_addmul(jj, pivot_col, -q)
                    if H[row][jj] != 0:
                        done = False
            if done:
                if H[row][pivot_col] < 0:
                    colop_addmul(pivot_col, pivot_col, -2)
                pivots.append(pivot_col)
                pivot_col += 1
                break
    y = [0] * n
    for row in range(m):
        acc = v[row]
        for jj in range(n):
            if y[jj] and H[row][jj]:
                acc -= H[row][jj] * y[jj]
        p = pivots[row] if row < len(pivots) else None
        if p is None:
            if acc != 0:
                return None
            continue
        if acc % H[row][p] != 0:
            return None
        y[p] = acc // H[row][p]
    k0 = [sum(U[i][j] * y[j] for j in range(n)) for i in range(n)]
    used = {p for p in pivots if p is not None}
    lattice = [[U[i][j] for i in range(n)] for j in range(n) if j not in used]
    return k0, lattice


def _search_nonnegative(k0, lattice, strict, node_budget):
    """Find integer t with k0 + W t ≥ 0 (≠ 0 if strict) by recursive
    Fourier-Motzkin bounding."""
    d = len(lattice)
    n = len(k0)
    ineqs = []
    for i in range(n):
        coeffs = tuple(Fraction(w[i]) for w in lattice)
        ineqs.append((coeffs, Fraction(k0[i])))
    count = [0]

    def points(system, nvars):
        if nvars == 0:
            if all(c >= 0 for _, c in system):
                yield ()
            return
        lowers, uppers, passed = [], [], []
        for coeffs, const in system:
            a = coeffs[nvars - 1]
            rest = coeffs[: nvars - 1]
            if a > 0:
                lowers.append((rest, const, a))
            elif a < 0:
                uppers.append((rest, const, a))
            else:
                passed.append((rest, const))
        reduced = list(passed)
        for lr, lc, la in lowers:
            for ur, uc, ua in uppers:
                coeffs = tuple(lr[i] * (-ua) + ur[i] * la for i in range(nvars - 1))
                const = lc * (-ua) + uc * la
                reduced.append((coeffs, const))
        for prefix in points(reduced, nvars - 1):
            lo, hi = None, None
            for lr, lc, la in lowers:
                val = lc + sum(r * p for r, p in zip(lr, prefix))
                bound = ceil(-val / la)
                lo = bound if lo is None else max(lo, bound)
            for ur, uc, ua in uppers:
                val = uc + sum(r * p for r, p in zip(ur, prefix))
                bound = floor(val / -ua)
                hi = bound if hi is None else min(hi, bound)
            if lo is None or hi is None:
                raise BudgetExhausted("unbounded lattice direction")
            t = lo
            while t <= hi:
                count[0] += 1
                if count[0] > node_budget:
                    raise BudgetExhausted("lattice enumeration", node_budget)
                yield prefix + (t,)
                t += 1

    try:
        for t in points(ineqs, d):
            k = [k0[i] + sum(lattice[j][i] * t[j] for j in range(d)) for i in range(n)]
            if all(x >= 0 for x in k) and (not strict or any(k)):
                return k
    except BudgetExhausted:
        return "budget"
    return None


# ---------------------------------------------------------------------------
# grid operations

def group_member(r: Monomial, ratios: RatioSet):
    """Decide r ∈ J^μ, the full group generated by the ratio set."""
    n = len(ratios)
    if r is ONE:
        return Member((0,) * n)
    if n == 0:
        return NotMember("empty ratio set generates only 1")
    try:
        vr = _log_vector(r)
        cols = [_log_vector(m) for m in ratios]
    except BudgetExhausted:
        return UnknownMembership("lazy exponent series did not terminate")
    keys = sorted(set(vr) | set().union(*cols), key=lambda k: repr(k))
    denom = 1
    rows, target = [], []
    for k in keys:
        row = [col.get(k, QZERO) for col in cols]
        rows.append(row)
        target.append(vr.get(k, QZERO))
    for row, t in zip(rows, target):
        for q in row:
            denom = denom * q.denominator // gcd(denom, q.denominator)
        denom = denom * t.denominator // gcd(denom, t.denominator)
    A = [[int(q * denom) for q in row] for row in rows]
    v = [int(t * denom) for t in target]
    solved = _solve_integer(A, v, n)
    if solved is None:
        return NotMember("no integer exponent solution")
    return Member(tuple(solved[0]))


def grid_member(g: Monomial, G: Grid):
    """Decide g ∈ J^{μ,m}; Member carries the absolute exponent vector."""
    r = mono_mul(g, mono_inv(G.base_monomial()))
    sol = monoid_member(r, G.ratios, strict=False)
    if isinstance(sol, Member):
        return Member(tuple(k + b for k, b in zip(sol.exponents, G.base)))
    return sol


def grid_union(G1: Grid, G2: Grid) -> Grid:
    ratios = G1.ratios.union(G2.ratios)
    b1 = dict(zip(G1.ratios, G1.base))
    b2 = dict(zip(G2.ratios, G2.base))
    base = tuple(min(b1.get(m, 0), b2.get(m, 0)) for m in ratios)
    return Grid(ratios, base)


def grid_product(G1: Grid, G2: Grid) -> Grid:
    ratios = G1.ratios.union(G2.ratios)
    b1 = dict(zip(G1.ratios, G1.base))
    b2 = dict(zip(G2.ratios, G2.base))
    base = tuple(b1.get(m, 0) + b2.get(m, 0) for m in ratios)
    return Grid(ratios, base)


def embed_shifted_monoid(g: Monomial, alpha: RatioSet) -> Grid:
    """A grid containing g·α*."""
    if g is ONE:
        return Grid.monoid(alpha)
    s = mono_sign(g)
    add = g if s < 0 else mono_inv(g)
    ratios = alpha.union(RatioSet.from_monomials([add]))
    base = tuple((1 if s < 0 else -1) if m is add else 0 for m in ratios)
    return Grid(ratios, base)


def min_elements(vectors) -> list:
    """Minimal elements of a finite F ⊂ Z^n under the product order."""
    vecs = list(dict.fromkeys(tuple(v) for v in vectors))
    out = []
    for v in vecs:
        dominated = False
        for w in vecs:
            if w != v and all(a <= b for a, b in zip(w, v)):
                dominated = True
                break
        if not dominated:
            out.append(v)
    out.sort()
    return out


def subgrid_witness(A, G: Grid) -> RatioSet:
    """Ratio set α ⊂ J^μ with A ⊆ (max A)·α*, by lifting A to exponent
    vectors and keeping the Dickson-minimal ones."""
    A = list(A)
    if not A:
        raise EmptyInput("subgrid witness of an empty set")
    F = []
    for a in A:
        sol = grid_member(a, G)
        if not isinstance(sol, Member):
            raise NotInGrid(a)
        F.append(sol.exponents)
    g = mono_max(A)
    extras = []
    ginv = mono_inv(g)
    for k in min_elements(F):
        mk = ONE
        for m, e in zip(G.ratios, k):
            mk = mono_mul(mk, mono_pow(m, Fraction(e)))
        if mk is not g:
            extras.append(mono_mul(mk, ginv))
    return G.ratios.union(RatioSet.from_monomials(extras))


def dominates(A, B, ratios: RatioSet, strict: bool = True):
    """Certificate for A ≺^μ B (or ≼^μ): every a is in some b·μ⁺ (μ*)."""
    budget_hit = None
    for a in A:
        ok = False
        for b in B:
            sol = monoid_member(mono_mul(a, mono_inv(b)), ratios, strict=strict)
            if isinstance(sol, Member):
                ok = True
                break
            if isinstance(sol, UnknownMembership):
                budget_hit = sol
        if not ok:
            if budget_hit is not None:
                return Unknown(budget_hit.reason)
            rel = "≺" if strict else "≼"
            return Failed(f"{mono_text(a)} {rel}^μ fails against every b", a)
    return proven("dominates")
