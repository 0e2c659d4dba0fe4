"""Differentiation and geometric convergence.

Differentiation is termwise (each monomial contributes its logarithmic
derivative times itself) merged through the ladder; the certificates on
the result come from the derivative addendum of the input's ratio set.
Geometric series are certified families A_j with a shared witness and
strictly descending witnessed terms; their sums, limits, and the
summation transport live here.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from . import config, grid as gridmod, series as srs
from .certificates import Checked, Proven, combine, proven
from .errors import (
    BudgetExhausted,
    CertificateViolation,
    HypothesisViolation,
    KernelBug,
)
from .grid import Grid, Member, RatioSet
from .monomial import (
    GT,
    LT,
    ONE,
    Monomial,
    ell_prime,
    mono_cmp,
    mono_inv,
    mono_mul,
    mono_shift,
    mono_sign,
)
from .rationals import QZERO, Const, ceq, cis_zero, cmul
from .series import (
    Transseries,
    Witness,
    ladder,
    lazy,
    leading_term,
    scale_series,
    ts_add,
    ts_compare,
    ts_mono,
    ts_mul,
    ts_neg,
    zero,
)

_mono_deriv_cache: dict = {}


def mono_derivative(m: Monomial) -> Transseries:
    """m' as a series: (b/x + L') · m, conjugated through the depth."""
    if m is ONE:
        return zero()
    hit = _mono_deriv_cache.get(m)
    if hit is not None:
        return hit
    parts = []
    if m.xexp != 0:
        from .monomial import mono_x

        parts.append(srs.ts_mono(mono_x(-1), Fraction(m.xexp)))
    if m.arg is not None:
        parts.append(raw_derive(srs.Transseries(m.arg.stream)))
    if not parts:
        out = zero()
    else:
        logd = parts[0] if len(parts) == 1 else srs.raw_add(parts[0], parts[1])
        if m.depth:
            logd = srs.map_monomials(logd, lambda g: mono_shift(g, -m.depth))
        factor = mono_mul(ell_prime(m.depth), m) if m.depth else m
        out = scale_series(logd, Fraction(1), factor)
    _mono_deriv_cache[m] = out
    return out


def raw_derive(t: Transseries) -> Transseries:
    """Termwise derivative without certificate bookkeeping."""

    def sources():
        for m, c in t.stream.iter_terms():
            if m is ONE:
                continue
            yield _scaled(mono_derivative(m), c)

    return lazy(lambda: ladder(sources()))


def _scaled(t: Transseries, c: Const) -> Iterator:
    for m, d in t.stream.iter_terms():
        yield (m, cmul(c, d))


def derive(t: Transseries) -> Transseries:
    """Certified derivative: the generator moves to the derivative
    addendum's grid; the witness transports when t is witnessed,
    generated, and not ≍ 1."""
    from . import witness as witmod

    out = raw_derive(t)
    out.budget = t.budget
    if t.gen is not None:
        wit = t.wit
        if wit is not None and wit.small:
            try:
                wit = srs.series_witness(t)
            except BudgetExhausted:
                wit = None
        ratios = t.gen.ratios if wit is None else t.gen.ratios.union(wit.ratios)
        add = witmod.derivative_addendum(ratios)
        out.gen = _derived_grid(t.gen, add.output)
        head = leading_term(t)
        if wit is not None and head is not None and head[0] is not ONE:
            out.wit = Witness(add.output, False,
                              combine(wit.cert, add.cert, "derivative_witness"))
    return out


def _derived_grid(gen: Grid, alpha: RatioSet) -> Grid:
    """Grid for the derivative of anything in J^{μ,m}: shift alpha's
    monoid by the magnitude of the derivative of the corner monomial."""
    corner = gen.base_monomial()
    if corner is ONE:
        if len(gen.ratios) == 0:
            return Grid.monoid(alpha)
        corner = mono_inv(gen.ratios.monos[0])
    head = leading_term(mono_derivative(corner))
    if head is None:
        return Grid.monoid(alpha)
    sol = gridmod.group_member(head[0], alpha)
    if isinstance(sol, Member):
        return Grid(alpha, sol.exponents)
    return gridmod.embed_shifted_monoid(head[0], alpha)


# ---------------------------------------------------------------------------
# geometric convergence

@dataclass
class GeometricSeries:
    """A_1, A_2, ... with μ witnessing every A_j and A_j ≻^μ A_{j+1}."""

    term_fn: Callable[[int], Transseries]
    ratios: RatioSet
    start: int = 1
    count: Optional[int] = None
    check_terms: int = 8
    certificate: object = field(default_factory=lambda: proven("geometric"))

    @classmethod
    def from_terms(cls, terms, ratios, start=1, **kw):
        terms = list(terms)
        return cls(lambda j: terms[j - start], ratios, start=start,
                   count=len(terms), **kw)

    def term(self, j: int) -> Transseries:
        return self.term_fn(j)

    def validate(self, upto: int | None = None):
        """Replay the certificate on a prefix of the family; raises
        CertificateViolation at the first offending index."""
        upto = self.check_terms if upto is None else upto
        last = self.start + upto - 1
        if self.count is not None:
            last = min(last, self.start + self.count - 1)
        prev = None
        for j in range(self.start, last + 1):
            a = self.term(j)
            if _witness_fails(a, self.ratios):
                raise CertificateViolation(j, "term not witnessed by the ratio set")
            if prev is not None:
                rep = ts_compare(a, prev, self.ratios)
                if not rep.certificate.ok:
                    raise CertificateViolation(j, "terms do not descend strictly")
            prev = a
        if j == self.start and leading_term(self.term(self.start)) is None:
            raise CertificateViolation(self.start, "first term is zero")


def _witness_fails(a: Transseries, ratios: RatioSet) -> bool:
    head = leading_term(a)
    if head is None:
        return False
    maginv = mono_inv(head[0])
    for m, _ in a.terms(a.budget):
        sol = gridmod.monoid_member(mono_mul(m, maginv), ratios, strict=False)
        if not isinstance(sol, Member):
            return True
    return False


def sum_geometric(gs: GeometricSeries) -> Transseries:
    """Point-finite sum of a geometric series; the result is witnessed
    by the series' ratio set and ∼ its first term."""
    gs.validate()

    def sources():
        j = gs.start
        while gs.count is None or j < gs.start + gs.count:
            yield gs.term(j).stream.iter_terms()
            j += 1

    out = lazy(lambda: ladder(sources()))
    first = gs.term(gs.start)
    if first.gen is not None:
        out.gen = gridmod.grid_product(
            srs._exact_gen([leading_term(first)]) if leading_term(first) else Grid.empty(),
            Grid.monoid(gs.ratios))
    out.wit = Witness(gs.ratios, False,
                      combine(gs.certificate, Checked(gs.check_terms), "geometric_sum"))
    return out


def geometric_limit(terms, ratios: RatioSet, count: int | None = None) -> Transseries:
    """Limit of a μ-geometrically Cauchy sequence: first element plus the
    geometrically convergent series of increments (zero increments are
    elided)."""
    seq = list(terms) if not callable(terms) else None
    if seq is not None:
        fn = lambda j: seq[j]
        count = len(seq)
    else:
        fn = terms
    first = fn(0)
    incs = []
    j = 0
    while count is None or j + 1 < count:
        if count is None and j + 1 > config.FIXED_POINT_ITERATIONS:
            raise BudgetExhausted("geometric limit", j)
        if count is None:
            break
        d = ts_add(fn(j + 1), ts_neg(fn(j)))
        if leading_term(d) is not None:
            incs.append(d)
        j += 1
    if not incs:
        return first
    gs = GeometricSeries.from_terms(incs, ratios)
    return ts_add(first, sum_geometric(gs))


def summation_lemma(a_fn, b_series: GeometricSeries, v: Transseries,
                    ratios: RatioSet, check_terms: int = 8) -> Transseries:
    """Sum Σ A_j when each A_j ∼ B_j·V with a shared witness; the sum is
    again geometrically convergent and ∼ (Σ B_j)·V."""
    if _witness_fails(v, ratios):
        raise HypothesisViolation("ratio set does not witness V")
    b_series.validate(check_terms)
    for j in range(b_series.start, b_series.start + check_terms):
        if b_series.count is not None and j >= b_series.start + b_series.count:
            break
        a = a_fn(j)
        if _witness_fails(a, ratios):
            raise HypothesisViolation("ratio set does not witness A_j", j)
        bv = ts_mul(b_series.term(j), v)
        ha, hb = leading_term(a), leading_term(bv)
        if ha is None or hb is None or ha[0] is not hb[0] or not ceq(ha[1], hb[1]):
            raise HypothesisViolation("A_j is not ~ B_j V", j)
    gs = GeometricSeries(a_fn, ratios, start=b_series.start,
                         count=b_series.count, check_terms=check_terms)
    return sum_geometric(gs)


# ---------------------------------------------------------------------------
# multiple series

@dataclass
class MultipleGeometricSeries:
    """Family over N^n: witnessed terms, strictly descending along <."""

    term_fn: Callable[[tuple], Transseries]
    ratios: RatioSet
    arity: int
    check_terms: int = 6
    certificate: object = field(default_factory=lambda: proven("geometric_multi"))

    def term(self, p: tuple) -> Transseries:
        return self.term_fn(tuple(p))

    def validate(self):
        origin = (0,) * self.arity
        if leading_term(self.term(origin)) is None:
            raise CertificateViolation(origin, "term at the origin is zero")
        pts = _box_points(self.arity, self.check_terms)
        for p in pts:
            a = self.term(p)
            if leading_term(a) is None:
                continue
            if _witness_fails(a, self.ratios):
                raise CertificateViolation(p, "term not witnessed")
            for q in pts:
                if q != p and all(x <= y for x, y in zip(p, q)):
                    b = self.term(q)
                    if leading_term(b) is None:
                        continue
                    rep = ts_compare(b, a, self.ratios)
                    if not rep.certificate.ok:
                        raise CertificateViolation(q, "terms do not descend along <")


def _box_points(arity: int, side: int):
    pts = [()]
    for _ in range(arity):
        pts = [p + (i,) for p in pts for i in range(side)]
    return [p for p in pts if sum(p) <= side]


class _FrontierEntry:
    __slots__ = ("head", "point", "stream")

    def __init__(self, head, point, stream):
        self.head = head
        self.point = point
        self.stream = stream

    def __lt__(self, other):
        return mono_cmp(self.head, other.head) == GT


def sum_geometric_multi(gs: MultipleGeometricSeries) -> Transseries:
    """Point-finite sum over N^n, enumerated by a frontier of lattice
    points ordered by their head monomials."""
    gs.validate()

    def sources():
        frontier: list[_FrontierEntry] = []
        seen = set()

        def push(p):
            if p in seen:
                return
            seen.add(p)
            t = gs.term(p)
            head = leading_term(t)
            if head is None:
                for i in range(gs.arity):
                    q = list(p)
                    q[i] += 1
                    push(tuple(q))
                return
            heapq.heappush(frontier, _FrontierEntry(head[0], p, t))

        push((0,) * gs.arity)
        while frontier:
            entry = heapq.heappop(frontier)
            yield entry.stream.stream.iter_terms()
            for i in range(gs.arity):
                q = list(entry.point)
                q[i] += 1
                push(tuple(q))

    out = lazy(lambda: ladder(sources()))
    out.wit = Witness(gs.ratios, False,
                      combine(gs.certificate, Checked(gs.check_terms), "geometric_sum"))
    return out


def summation_lemma_multi(a_fn, b_series: MultipleGeometricSeries,
                          v: Transseries, ratios: RatioSet) -> Transseries:
    if _witness_fails(v, ratios):
        raise HypothesisViolation("ratio set does not witness V")
    b_series.validate()
    for p in _box_points(b_series.arity, b_series.check_terms):
        a = a_fn(p)
        bv = ts_mul(b_series.term(p), v)
        ha, hb = leading_term(a), leading_term(bv)
        if ha is None and hb is None:
            continue
        if ha is None or hb is None or ha[0] is not hb[0] or not ceq(ha[1], hb[1]):
            raise HypothesisViolation("A_p is not ~ B_p V", p)
    gs = MultipleGeometricSeries(a_fn, ratios, b_series.arity,
                                 check_terms=b_series.check_terms)
    return sum_geometric_multi(gs)


def derive_geometric(gs: GeometricSeries) -> GeometricSeries:
    """Differentiate a geometric series termwise; converges against the
    derivative addendum of the original ratio set."""
    from . import witness as witmod

    add = witmod.derivative_addendum(gs.ratios)
    return GeometricSeries(lambda j: derive(gs.term(j)), add.output,
                           start=gs.start, count=gs.count,
                           check_terms=gs.check_terms,
                           certificate=combine(gs.certificate, add.cert,
                                               "derive_geometric"))
