"""Grid-based transseries as lazy decreasing term streams.

Every stream is memoized and checked for strict monomial decrease as it
is forced.  A single merge engine (`ladder`) powers multiplication and
all power-series evaluations: it consumes an ordered sequence of term
sources whose head monomials do not increase, and interleaves them into
one decreasing stream, activating new sources exactly when their heads
could still matter.

A series carries two certificates: `gen`, a grid the support is
contained in, and optionally `wit`, a ratio set witnessing the series
(supp T ⊆ mag T · α*) or witnessing T ≺ 1 (supp T ⊆ α⁺).
"""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Callable, Iterable, Iterator, Optional

from . import config, grid as gridmod
from .certificates import Checked, Failed, Proven, Unknown, combine, proven
from .errors import (
    BudgetExhausted,
    KernelBug,
    NegativeLeadingForFractionalPower,
    NonPositiveLeading,
    NotSmall,
    WitnessMissing,
    ZeroInput,
)
from .monomial import (
    EQ,
    GT,
    LT,
    ONE,
    Monomial,
    X,
    ell,
    is_small,
    make_mono,
    mono_cmp,
    mono_inv,
    mono_log,
    mono_mul,
    mono_pow,
    mono_shift,
    mono_sign,
    mono_text,
)
from .rationals import (
    QONE,
    QZERO,
    Const,
    cadd,
    cdiv,
    cexp,
    cis_zero,
    clog,
    cmul,
    cneg,
    cpow,
    csign,
    ctext,
)

Term = tuple  # (Monomial, Const)


# ---------------------------------------------------------------------------
# streams

class Stream:
    """Memoized lazy list of (monomial, coefficient) terms.

    A budget failure poisons the stream: the error replays on later
    forcing instead of the closed generator masquerading as exhausted."""

    __slots__ = ("_it", "_cache", "_done", "_lock", "_error")

    def __init__(self, iterator: Iterator[Term] | None, cache: list | None = None):
        self._it = iterator
        self._cache = cache if cache is not None else []
        self._done = iterator is None
        self._lock = threading.RLock()
        self._error = None

    def force_len(self, n: int) -> int:
        """Extend the memoized prefix to at least n terms when possible;
        returns the number of terms available (≤ n unless already longer)."""
        if self._done or len(self._cache) >= n:
            return min(n, len(self._cache))
        if self._error is not None and len(self._cache) < n:
            raise self._error
        with self._lock:
            while not self._done and len(self._cache) < n:
                try:
                    term = next(self._it)
                except StopIteration:
                    self._done = True
                    self._it = None
                    break
                except BudgetExhausted as exc:
                    self._error = exc
                    self._it = None
                    raise
                if self._cache and mono_cmp(term[0], self._cache[-1][0]) != LT:
                    raise KernelBug(
                        f"stream not strictly decreasing: {term[0]} after {self._cache[-1][0]}"
                    )
                self._cache.append(term)
        return min(n, len(self._cache))

    def force(self, n: int) -> list:
        k = self.force_len(n)
        return self._cache[:k]

    def at(self, i: int) -> Term:
        return self._cache[i]

    @property
    def done(self) -> bool:
        return self._done

    def known(self) -> list:
        return list(self._cache)

    def iter_terms(self) -> Iterator[Term]:
        i = 0
        while True:
            if i >= len(self._cache) and self.force_len(i + 1) <= i:
                return
            yield self._cache[i]
            i += 1


@dataclass(frozen=True)
class Witness:
    """α witnesses T (small=False: supp ⊆ mag·α*) or T ≺ 1 (small=True:
    supp ⊆ α⁺)."""

    ratios: "gridmod.RatioSet"
    small: bool
    cert: object

    def text(self) -> str:
        kind = "small" if self.small else "series"
        return f"{self.ratios.text()} {kind} {self.cert.text()}"


class Transseries:
    __slots__ = ("stream", "gen", "wit", "budget")

    def __init__(self, stream: Stream, gen=None, wit: Witness | None = None,
                 budget: int | None = None):
        self.stream = stream
        self.gen = gen
        self.wit = wit
        self.budget = budget if budget is not None else config.default_budget()

    # -- forcing -----------------------------------------------------------
    def terms(self, n: int | None = None) -> list:
        return self.stream.force(self.budget if n is None else n)

    def dom(self) -> Term | None:
        got = self.stream.force(1)
        return got[0] if got else None

    def mag(self) -> Monomial | None:
        d = self.dom()
        return d[0] if d else None

    def is_zero(self, n: int | None = None) -> bool:
        """True only when the stream provably ends with no terms."""
        self.terms(n)
        return self.stream.done and not self.stream.known()

    def coefficient(self, mono: Monomial, n: int | None = None) -> Const:
        for m, c in self.terms(n):
            if m is mono:
                return c
            if mono_cmp(m, mono) == LT:
                break
        return QZERO

    # -- operators ----------------------------------------------------------
    def __add__(self, other):
        return ts_add(self, _coerce(other))

    __radd__ = __add__

    def __neg__(self):
        return ts_neg(self)

    def __sub__(self, other):
        return ts_add(self, ts_neg(_coerce(other)))

    def __rsub__(self, other):
        return ts_add(_coerce(other), ts_neg(self))

    def __mul__(self, other):
        return ts_mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ts_mul(self, ts_power(_coerce(other), Fraction(-1)))

    def __repr__(self):
        return f"<transseries {series_text(self, 4)}>"


def _coerce(v) -> Transseries:
    if isinstance(v, Transseries):
        return v
    if isinstance(v, Monomial):
        return ts_mono(v)
    return ts_const(v)


@dataclass
class Decomposition:
    large: Transseries
    constant: Const
    small: Transseries

    def recompose(self) -> Transseries:
        return ts_add(ts_add(self.large, ts_const(self.constant)), self.small)


# ---------------------------------------------------------------------------
# constructors

_EMPTY = None


def zero() -> Transseries:
    global _EMPTY
    if _EMPTY is None:
        _EMPTY = Transseries(Stream(None, []), gen=gridmod.Grid.empty())
    return _EMPTY


def from_sorted_terms(terms: Iterable[Term], gen=None, wit=None) -> Transseries:
    """Trusted constructor: terms already strictly decreasing, nonzero."""
    terms = list(terms)
    if not terms:
        return zero()
    ts = Transseries(Stream(None, terms), gen=gen, wit=wit)
    if gen is None:
        ts.gen = _exact_gen(terms)
    if wit is None:
        ts.wit = _literal_witness(terms)
    return ts


def _literal_witness(terms: list) -> Witness | None:
    """Free exact witness for a finite term list."""
    monos = [m for m, _ in terms]
    if all(mono_sign(m) < 0 for m in monos):
        return Witness(gridmod.RatioSet.from_monomials(monos), True,
                       proven("finite_small_support"))
    mag = monos[0]
    maginv = mono_inv(mag)
    ratios = []
    for m in monos[1:]:
        ratios.append(mono_mul(m, maginv))
    return Witness(gridmod.RatioSet.from_monomials(ratios), False,
                   proven("finite_support"))


def ts_from_terms(pairs: Iterable, gen=None, wit=None) -> Transseries:
    """Sort, merge duplicates, and drop zero coefficients."""
    bucket: dict = {}
    order: list = []
    for m, c in pairs:
        if m in bucket:
            bucket[m] = cadd(bucket[m], c)
        else:
            bucket[m] = c
            order.append(m)
    order.sort(key=cmp_to_key(mono_cmp), reverse=True)
    terms = [(m, bucket[m]) for m in order if not cis_zero(bucket[m])]
    return from_sorted_terms(terms, gen=gen, wit=wit)


def ts_const(c) -> Transseries:
    from .rationals import cnorm

    c = cnorm(c) if not isinstance(c, (Fraction, int)) else (
        Fraction(c) if isinstance(c, int) else c)
    if cis_zero(c):
        return zero()
    return from_sorted_terms([(ONE, c)])


def ts_mono(m: Monomial, c: Const = QONE) -> Transseries:
    if cis_zero(c):
        return zero()
    return from_sorted_terms([(m, c)])


def ts_x() -> Transseries:
    return ts_mono(X)


def lazy(make_iter: Callable[[], Iterator[Term]], gen=None, wit=None,
         budget: int | None = None) -> Transseries:
    return Transseries(Stream(make_iter()), gen=gen, wit=wit, budget=budget)


def _exact_gen(terms: list):
    ratios = []
    large = set()
    for m, _ in terms:
        if m is ONE:
            continue
        if mono_sign(m) < 0:
            ratios.append(m)
        else:
            inv = mono_inv(m)
            ratios.append(inv)
            large.add(inv)
    rset = gridmod.RatioSet.from_monomials(ratios)
    base = tuple(-1 if r in large else 0 for r in rset)
    return gridmod.Grid(rset, base)


def ensure_gen(ts: Transseries):
    """Grid certificate, computed from the forced prefix when absent."""
    if ts.gen is None:
        try:
            terms = ts.terms()
        except BudgetExhausted:
            terms = ts.stream.known()
        ts.gen = _exact_gen(terms)
    return ts.gen


# ---------------------------------------------------------------------------
# low-level helpers shared with the monomial layer

def probe_finite(ts: Transseries, n: int):
    ts.stream.force_len(n)
    if ts.stream.done:
        return tuple(ts.stream.known())
    return None


def force_prefix(ts: Transseries, n: int) -> list:
    return ts.stream.force(n)


def force_all(ts: Transseries, budget: int) -> list:
    got = ts.stream.force(budget)
    if not ts.stream.done:
        raise BudgetExhausted("series did not terminate", budget)
    return got


def leading_term(ts: Transseries):
    got = ts.stream.force(1)
    return got[0] if got else None


def map_monomials(ts: Transseries, f: Callable[[Monomial], Monomial],
                  gen=None) -> Transseries:
    def gen_terms():
        for m, c in ts.stream.iter_terms():
            yield (f(m), c)

    return lazy(gen_terms, gen=gen)


def scale_series(ts: Transseries, q: Const, mono: Monomial = ONE) -> Transseries:
    if cis_zero(q):
        return zero()

    def gen_terms():
        for m, c in ts.stream.iter_terms():
            yield (mono_mul(mono, m), cmul(q, c))

    g = None
    if ts.gen is not None and mono is ONE:
        g = ts.gen
    return lazy(gen_terms, gen=g, wit=ts.wit if mono is ONE else None)


def append_smaller(ts: Transseries, mono: Monomial, coeff: Const) -> Transseries:
    def gen_terms():
        yield from ts.stream.iter_terms()
        yield (mono, coeff)

    return lazy(gen_terms)


def raw_add(a: Transseries, b: Transseries) -> Transseries:
    """Merge without certificate bookkeeping (monomial internals)."""
    return lazy(lambda: _merge2(a.stream.iter_terms(), b.stream.iter_terms()))


def _merge2(ita: Iterator[Term], itb: Iterator[Term]) -> Iterator[Term]:
    a = next(ita, None)
    b = next(itb, None)
    dry = 0
    while a is not None or b is not None:
        if b is None:
            yield a
            a = next(ita, None)
            continue
        if a is None:
            yield b
            b = next(itb, None)
            continue
        c = mono_cmp(a[0], b[0])
        if c == GT:
            yield a
            a = next(ita, None)
        elif c == LT:
            yield b
            b = next(itb, None)
        else:
            s = cadd(a[1], b[1])
            if cis_zero(s):
                dry += 1
                if dry > config.CANCEL_BUDGET:
                    raise BudgetExhausted("total cancellation not detected", dry)
            else:
                dry = 0
                yield (a[0], s)
            a = next(ita, None)
            b = next(itb, None)


# ---------------------------------------------------------------------------
# the ladder merge engine

class _Entry:
    __slots__ = ("mono", "coeff", "it")

    def __init__(self, mono, coeff, it):
        self.mono = mono
        self.coeff = coeff
        self.it = it

    def __lt__(self, other):  # max-heap by magnitude
        return mono_cmp(self.mono, other.mono) == GT


def ladder(sources: Iterator[Iterator[Term]]) -> Iterator[Term]:
    """Merge term sources whose head monomials do not increase along the
    source sequence.  Sources are activated lazily: a new source is
    loaded only while its head could still outrank every active head."""
    active: list[_Entry] = []
    pending = iter(sources)
    nxt: _Entry | None = None
    exhausted = False
    work = 0

    def load_next():
        nonlocal nxt, exhausted, work
        while not exhausted:
            try:
                src = next(pending)
            except StopIteration:
                exhausted = True
                nxt = None
                return
            head = next(src, None)
            work += 1
            if work > config.CANCEL_BUDGET:
                raise BudgetExhausted("merge stalled while loading sources", work)
            if head is not None:
                nxt = _Entry(head[0], head[1], src)
                return
        nxt = None

    load_next()
    dry = 0
    while True:
        while nxt is not None and (not active or mono_cmp(nxt.mono, active[0].mono) != LT):
            heapq.heappush(active, nxt)
            load_next()
        if not active:
            return
        top = heapq.heappop(active)
        mono = top.mono
        coeff = top.coeff
        _advance(active, top)
        while active and mono_cmp(active[0].mono, mono) == EQ:
            other = heapq.heappop(active)
            coeff = cadd(coeff, other.coeff)
            _advance(active, other)
        if cis_zero(coeff):
            dry += 1
            if dry > config.CANCEL_BUDGET:
                raise BudgetExhausted("total cancellation not detected", dry)
        else:
            dry = 0
            yield (mono, coeff)


def _advance(active: list, entry: _Entry):
    term = next(entry.it, None)
    if term is not None:
        entry.mono, entry.coeff = term
        heapq.heappush(active, entry)


# ---------------------------------------------------------------------------
# ring operations

def ts_neg(a: Transseries) -> Transseries:
    return scale_series(a, Fraction(-1))


def ts_add(a: Transseries, b: Transseries) -> Transseries:
    if _is_literal_zero(a):
        return b
    if _is_literal_zero(b):
        return a
    gen = None
    if a.gen is not None and b.gen is not None:
        gen = gridmod.grid_union(a.gen, b.gen)
    wit = _sum_witness(a, b)
    return lazy(lambda: _merge2(a.stream.iter_terms(), b.stream.iter_terms()),
                gen=gen, wit=wit, budget=max(a.budget, b.budget))


def _is_literal_zero(ts: Transseries) -> bool:
    return ts.stream.done and not ts.stream.known()


def _sum_witness(a: Transseries, b: Transseries) -> Witness | None:
    # witness survives a sum only for two witnessed small series
    if a.wit is None or b.wit is None:
        return None
    try:
        asmall = _witnessed_small(a)
        bsmall = _witnessed_small(b)
    except BudgetExhausted:
        return None
    if asmall and bsmall:
        ratios = a.wit.ratios.union(b.wit.ratios)
        cert = combine(a.wit.cert, b.wit.cert, "sum_of_small")
        return Witness(ratios, True, cert)
    return None


def _witnessed_small(ts: Transseries) -> bool:
    """Does the attached witness certify ts ≺ 1?"""
    if ts.wit is None:
        return False
    if ts.wit.small:
        return True
    head = leading_term(ts)
    if head is None:
        return True
    sol = gridmod.monoid_member(head[0], ts.wit.ratios, strict=True)
    return isinstance(sol, gridmod.Member)


def ts_mul(a: Transseries, b: Transseries) -> Transseries:
    if _is_literal_zero(a) or _is_literal_zero(b):
        return zero()

    def sources():
        for m, c in a.stream.iter_terms():
            yield _row(m, c, b)

    gen = None
    if a.gen is not None and b.gen is not None:
        gen = gridmod.grid_product(a.gen, b.gen)
    wit = _product_witness(a, b)
    return lazy(lambda: ladder(sources()), gen=gen, wit=wit,
                budget=max(a.budget, b.budget))


def _row(m: Monomial, c: Const, b: Transseries) -> Iterator[Term]:
    for n, d in b.stream.iter_terms():
        yield (mono_mul(m, n), cmul(c, d))


def _product_witness(a: Transseries, b: Transseries) -> Witness | None:
    if a.wit is None or b.wit is None:
        return None
    ratios = a.wit.ratios.union(b.wit.ratios)
    cert = combine(a.wit.cert, b.wit.cert, "product_witness")
    if not a.wit.small and not b.wit.small:
        return Witness(ratios, False, cert)
    if a.wit.small and b.wit.small:
        return Witness(ratios, True, cert)
    return None


def ts_decompose(a: Transseries) -> Decomposition:
    large_terms = []
    constant = QZERO
    idx = 0
    while True:
        if a.stream.force_len(idx + 1) <= idx:
            break
        m, c = a.stream.at(idx)
        s = mono_sign(m)
        if s > 0:
            large_terms.append((m, c))
            idx += 1
            continue
        if s == 0:
            constant = c
            idx += 1
        break
        # small tail starts at idx
    skip = idx

    def tail():
        i = skip
        while True:
            if a.stream.force_len(i + 1) <= i:
                return
            yield a.stream.at(i)
            i += 1

    large = from_sorted_terms(large_terms)
    small = lazy(tail, gen=a.gen, budget=a.budget)
    if a.wit is not None and a.wit.small:
        small.wit = a.wit
    return Decomposition(large, constant, small)


def _split_leading(a: Transseries):
    """a = c·g·(1+S) with S ≺ 1; returns (c, g, S)."""
    head = leading_term(a)
    if head is None:
        raise ZeroInput("zero series has no multiplicative decomposition")
    g, c = head

    def tail():
        i = 1
        ginv = mono_inv(g)
        while True:
            if a.stream.force_len(i + 1) <= i:
                return
            m, d = a.stream.at(i)
            yield (mono_mul(ginv, m), cdiv(d, c))
            i += 1

    s = lazy(tail, budget=a.budget)
    if a.gen is not None:
        base = gridmod.grid_member(g, a.gen)
        if isinstance(base, gridmod.Member):
            s.gen = a.gen.shift(tuple(-k for k in base.exponents))
    if a.wit is not None and not a.wit.small:
        s.wit = Witness(a.wit.ratios, True, a.wit.cert)
    return c, g, s


def small_witness(s: Transseries, extra=None) -> Witness:
    """Ratio set witnessing s ≺ 1, built from the subgrid witness of the
    forced support plus the magnitude itself."""
    base = extra if extra is not None else gridmod.RatioSet(())
    if s.wit is not None and s.wit.small:
        return Witness(s.wit.ratios.union(base), True, s.wit.cert)
    terms = probe_finite(s, s.budget)
    exact = terms is not None
    prefix = list(terms) if exact else force_prefix(s, s.budget)
    if not prefix:
        return Witness(base, True, proven("empty_support"))
    supp = [m for m, _ in prefix]
    g = ensure_gen(s)
    try:
        alpha = gridmod.subgrid_witness(supp, g)
    except Exception:
        alpha = gridmod.RatioSet.from_monomials(supp)
    ratios = base.union(alpha).union(gridmod.RatioSet.from_monomials([supp[0]]))
    cert = proven("smallness_addendum") if exact else Checked(len(prefix), ("smallness_addendum",))
    return Witness(ratios, True, cert)


def series_witness(ts: Transseries) -> Witness:
    """Ratio set witnessing ts (supp ⊆ mag·α*), subgrid-witness based."""
    if ts.wit is not None and not ts.wit.small:
        return ts.wit
    terms = probe_finite(ts, ts.budget)
    exact = terms is not None
    prefix = list(terms) if exact else force_prefix(ts, ts.budget)
    if not prefix:
        return Witness(gridmod.RatioSet(()), False, proven("empty_support"))
    supp = [m for m, _ in prefix]
    g = ensure_gen(ts)
    alpha = gridmod.subgrid_witness(supp, g)
    cert = proven("subgrid_witness") if exact else Checked(len(prefix), ("subgrid_witness",))
    return Witness(alpha, False, cert)


def _binomial(b: Fraction, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out *= (b - i)
        out /= (i + 1)
    return out


class _PowerCache:
    """Memoized powers S^j of a small series."""

    def __init__(self, s: Transseries):
        self.s = s
        self._pows = [ts_const(1), s]

    def get(self, j: int) -> Transseries:
        while len(self._pows) <= j:
            self._pows.append(ts_mul(self._pows[-1], self.s))
        return self._pows[j]


def _series_family_sum(coeff_of: Callable[[int], Const], powers: _PowerCache,
                       start: int = 0, stop: int | None = None) -> Transseries:
    """Σ_j coeff(j)·S^j as a lazy decreasing stream."""
    if leading_term(powers.s) is None:
        # only S^0 = 1 survives
        if start > 0:
            return zero()
        stop = 0

    def sources():
        j = start
        while stop is None or j <= stop:
            c = coeff_of(j)
            if not cis_zero(c):
                yield _scaled_iter(powers.get(j), c)
            else:
                yield iter(())
            j += 1

    return lazy(lambda: ladder(sources()))


def _scaled_iter(ts: Transseries, c: Const) -> Iterator[Term]:
    for m, d in ts.stream.iter_terms():
        yield (m, cmul(c, d))


def ts_power(a: Transseries, b) -> Transseries:
    """a**b for rational b (b = -1 gives the inverse)."""
    b = Fraction(b)
    c, g, s = _split_leading(a)
    if b.denominator != 1 and csign(c) < 0:
        raise NegativeLeadingForFractionalPower(
            f"leading coefficient {ctext(c)} < 0 with exponent {b}")
    if b == 0:
        return ts_const(1)
    newc = cpow(c, b)
    newg = mono_pow(g, b)
    stop = b.numerator if b.denominator == 1 and b >= 0 else None
    powers = _PowerCache(s)
    body = _series_family_sum(lambda j: _binomial(b, j), powers, 0, stop)
    out = scale_series(body, newc, newg)
    out.budget = a.budget
    wit = None
    if a.wit is not None and not a.wit.small:
        wit = Witness(a.wit.ratios, False, combine(a.wit.cert, proven(), "power_witness"))
    else:
        try:
            wit = Witness(small_witness(s).ratios, False, Checked(s.budget, ("power_witness",)))
        except BudgetExhausted:
            wit = None
    out.wit = wit
    out.gen = _shifted_monoid_gen(newg, wit.ratios if wit else None, s)
    return out


def _shifted_monoid_gen(g: Monomial, ratios, s: Transseries):
    """Grid containing g·(alphabet)* where the alphabet covers supp-monoid
    of the small series s."""
    alphabet = ratios if ratios is not None else gridmod.RatioSet(())
    head = leading_term(s)
    if head is not None:
        alphabet = alphabet.union(gridmod.RatioSet.from_monomials([head[0]]))
    return gridmod.embed_shifted_monoid(g, alphabet)


def _factorial_inv(j: int) -> Fraction:
    out = Fraction(1)
    for i in range(1, j + 1):
        out /= i
    return out


def ts_exp(a: Transseries) -> Transseries:
    """exp(a) = e^const · e^large · Σ small^j / j!."""
    if _is_literal_zero(a):
        return ts_const(1)
    dec = ts_decompose(a)
    expc = cexp(dec.constant) if not cis_zero(dec.constant) else QONE
    emono = _mono_exp(dec.large)
    s = dec.small
    try:
        wit_small = small_witness(s)
    except BudgetExhausted:
        wit_small = None
    powers = _PowerCache(s)
    body = _series_family_sum(_factorial_inv, powers, 0, None)
    out = scale_series(body, expc, emono)
    out.budget = a.budget
    if wit_small is not None:
        out.wit = Witness(wit_small.ratios, False,
                          combine(wit_small.cert, proven(), "exp_witness"))
        if mono_sign(emono) < 0:
            # e^a ≺ 1, witnessed once e^L joins the alphabet
            small_ratios = wit_small.ratios.union(
                gridmod.RatioSet.from_monomials([emono]))
            out.wit = Witness(small_ratios, True,
                              combine(wit_small.cert, proven(), "exp_small_witness"))
        out.gen = _shifted_monoid_gen(emono, out.wit.ratios, s)
    else:
        out.gen = _shifted_monoid_gen(emono, None, s)
    return out


def _mono_exp(large: Transseries) -> Monomial:
    """The monomial e^L for a purely large series L."""
    if _is_literal_zero(large):
        return ONE
    prefix = force_prefix(large, 8)
    depth = max((m.depth for m, _ in prefix), default=0)
    if depth == 0:
        arg = large
    else:
        arg = map_monomials(large, lambda m: mono_shift(m, depth))
    return make_mono(depth, QZERO, arg)


def ts_log(a: Transseries) -> Transseries:
    """log(a) = log(mag) + log(coefficient) + log(1 + small)."""
    c, g, s = _split_leading(a)
    if csign(c) <= 0:
        raise NonPositiveLeading(f"log of series with leading coefficient {ctext(c)}")
    lser = mono_log(g)
    logc = clog(c)
    powers = _PowerCache(s)
    body = _series_family_sum(
        lambda j: Fraction((-1) ** (j + 1), j) if j else QZERO, powers, 1, None)

    def gen_terms():
        yield from lser.stream.iter_terms()
        if not cis_zero(logc):
            yield (ONE, logc)
        yield from body.stream.iter_terms()

    out = lazy(gen_terms, budget=a.budget)
    try:
        beta = small_witness(s)
        lwit = series_witness(lser) if leading_term(lser) else None
        ratios = beta.ratios
        cert = beta.cert
        trace = ["log_witness"]
        if lwit is not None:
            ratios = ratios.union(lwit.ratios)
            maginv = mono_inv(leading_term(lser)[0])
            ratios = ratios.union(gridmod.RatioSet.from_monomials([maginv]))
            cert = combine(cert, lwit.cert, "log_witness")
            trace.append("mag_large_inverse")
        out.wit = Witness(ratios, False, cert)
    except BudgetExhausted:
        out.wit = None
    lgen = ensure_gen(lser) if probe_finite(lser, 16) is not None else gridmod.Grid.empty()
    out.gen = gridmod.grid_union(
        gridmod.grid_union(lgen, gridmod.Grid.empty()),
        _shifted_monoid_gen(ONE, out.wit.ratios if out.wit else None, s))
    return out


def ts_laurent(coeff_fn: Callable[[tuple], Const], minimal: tuple,
               factors: list, jmax: int | None = None) -> Transseries:
    """Σ c_{j1..jm} S1^{j1}···Sm^{jm} over ji ≥ minimal[i]."""
    if not factors:
        raise ZeroInput("laurent evaluation needs at least one small series")
    for i, s in enumerate(factors):
        head = leading_term(s)
        if head is None or mono_sign(head[0]) >= 0:
            raise NotSmall(f"factor {i + 1} is not ≺ 1")
        if s.wit is None or not _witnessed_small(s):
            raise WitnessMissing(f"factor {i + 1} carries no smallness witness")
    out = _laurent_rec(coeff_fn, tuple(minimal), [ _PowerCache(s) for s in factors ],
                       [s for s in factors], (), jmax)
    ratios = gridmod.RatioSet(())
    for s in factors:
        ratios = ratios.union(s.wit.ratios)
    lead_ok = not cis_zero(coeff_fn(tuple(minimal)))
    if lead_ok:
        cert = proven("laurent_leading_witness")
        for s in factors:
            cert = combine(cert, s.wit.cert, "laurent_factor")
        out.wit = Witness(ratios, False, cert)
    else:
        try:
            out.wit = small_witness(out, ratios) if _laurent_all_small(factors) else None
        except BudgetExhausted:
            out.wit = None
    shift = ONE
    for i, s in enumerate(factors):
        shift = mono_mul(shift, mono_pow(leading_term(s)[0], Fraction(minimal[i])))
    mags = gridmod.RatioSet.from_monomials([leading_term(s)[0] for s in factors])
    out.gen = gridmod.embed_shifted_monoid(shift, ratios.union(mags))
    return out


def _laurent_all_small(factors) -> bool:
    return all(leading_term(s) is None or mono_sign(leading_term(s)[0]) < 0
               for s in factors)


def _laurent_rec(coeff_fn, minimal, caches, factors, prefix, jmax) -> Transseries:
    axis = len(prefix)
    if axis == len(factors) - 1:
        def coeff_of(j):
            return coeff_fn(prefix + (j,))

        return _series_family_sum(coeff_of, caches[axis], minimal[axis], jmax)

    def sources():
        j = minimal[axis]
        while jmax is None or j <= jmax:
            inner = _laurent_rec(coeff_fn, minimal, caches, factors,
                                 prefix + (j,), jmax)
            yield _scaled_series_iter(caches[axis].get(j), inner)
            if j >= 1 and leading_term(caches[axis].s) is None:
                return
            j += 1

    return lazy(lambda: ladder(sources()))


def _scaled_series_iter(power: Transseries, inner: Transseries) -> Iterator[Term]:
    prod = ts_mul(power, inner)
    return prod.stream.iter_terms()


# ---------------------------------------------------------------------------
# comparison

@dataclass
class CompareReport:
    relation: str               # one of "prec", "succ", "asymp", "sim", "eq"
    witness: object             # RatioSet | None
    certificate: object
    evidence: object = None

    def text(self) -> str:
        sym = {"prec": "≺", "succ": "≻", "asymp": "≍", "sim": "∼", "eq": "="}[self.relation]
        wit = f" witness {self.witness.text()}" if self.witness is not None else ""
        return f"{sym}{wit} [{self.certificate.text()}]"


def ts_compare(a: Transseries, b: Transseries, ratios=None, strict: bool = True) -> CompareReport:
    """Certified comparison.  With a ratio set: decide a ≺^μ b (or ≼^μ).
    Without: decide the plain relation and construct a witness for ≺."""
    if ratios is not None:
        ka = min(a.budget, config.default_budget())
        suppa = force_prefix(a, ka)
        exact_a = a.stream.done
        suppb = force_prefix(b, b.budget)
        cert = gridmod.dominates([m for m, _ in suppa], [m for m, _ in suppb],
                                 ratios, strict=strict)
        if isinstance(cert, Failed):
            return CompareReport("prec", ratios, cert, cert.evidence)
        if not exact_a and isinstance(cert, Proven):
            cert = Checked(len(suppa), cert.trace)
        return CompareReport("prec", ratios, cert)
    da, db = a.dom(), b.dom()
    if da is None and db is None:
        return CompareReport("eq", None, proven("both_zero"))
    if da is None:
        return CompareReport("prec", None, proven("zero_left"))
    if db is None:
        return CompareReport("succ", None, proven("zero_right"))
    c = mono_cmp(da[0], db[0])
    if c == LT or c == GT:
        small, big = (a, b) if c == LT else (b, a)
        alpha = series_witness(small)
        ratio = mono_mul(small.dom()[0], mono_inv(big.dom()[0]))
        wit = alpha.ratios.union(gridmod.RatioSet.from_monomials([ratio]))
        rel = "prec" if c == LT else "succ"
        return CompareReport(rel, wit, combine(alpha.cert, proven(), "pwitness_union"))
    from .rationals import ceq

    if ceq(da[1], db[1]):
        diff = ts_add(a, ts_neg(b))
        try:
            if diff.is_zero():
                return CompareReport("eq", None, proven("prefix_equal"))
        except BudgetExhausted:
            pass
        return CompareReport("sim", None, proven("equal_dominant_terms"))
    return CompareReport("asymp", None, proven("equal_magnitudes"))


def empty_prefix(ts: Transseries, drain: int | None = None) -> bool:
    """True when no nonzero term surfaces: either the stream provably
    ends empty, or a bounded drain finds only cancellations."""
    try:
        with config.cancel_budget(drain if drain is not None else 24):
            return leading_term(ts) is None
    except BudgetExhausted:
        return not ts.stream.known()


def validate_prefix(ts: Transseries, n: int | None = None) -> list:
    """Spot-check the gen and wit certificates on the forced prefix.
    Returns a list of human-readable violations (empty = sound)."""
    issues = []
    terms = ts.terms(n)
    if ts.gen is not None:
        for m, _ in terms:
            sol = gridmod.grid_member(m, ts.gen)
            if not isinstance(sol, gridmod.Member):
                issues.append(f"generator certificate misses {m}")
    if ts.wit is not None and terms:
        if ts.wit.small:
            for m, _ in terms:
                sol = gridmod.monoid_member(m, ts.wit.ratios, strict=True)
                if not isinstance(sol, gridmod.Member):
                    issues.append(f"smallness witness misses {m}")
        else:
            mag = terms[0][0]
            maginv = mono_inv(mag)
            for m, _ in terms:
                sol = gridmod.monoid_member(mono_mul(m, maginv), ts.wit.ratios,
                                            strict=False)
                if not isinstance(sol, gridmod.Member):
                    issues.append(f"witness misses {m}")
    return issues


# ---------------------------------------------------------------------------
# text formats

def _display_terms(ts: Transseries, count: int):
    try:
        ts.stream.force_len(count + 1)
    except BudgetExhausted:
        pass
    terms = ts.stream.known()[:count]
    truncated = not ts.stream.done or len(ts.stream.known()) > count
    return terms, truncated


def series_text(ts: Transseries, n: int | None = None, dump: bool = False) -> str:
    count = ts.budget if n is None else n
    terms, truncated = _display_terms(ts, count)
    if not terms:
        return "0"
    parts = []
    for i, (m, c) in enumerate(terms):
        neg = False
        if isinstance(c, Fraction) and c < 0:
            neg = True
            c = -c
        piece = f"{ctext(c)}*{mono_text(m, dump=dump)}"
        if i == 0:
            parts.append(("-" if neg else "") + piece)
        else:
            parts.append(("- " if neg else "+ ") + piece)
    body = " ".join(parts)
    if truncated:
        body += " + ..."
    return body


def dump_text(ts: Transseries, n: int | None = None) -> str:
    """Line-oriented bit-exact dump."""
    count = ts.budget if n is None else n
    lines = ["transseries v1"]
    terms, truncated = _display_terms(ts, count)
    ensure_gen(ts)
    lines.append(f"gen={ts.gen.text()}")
    lines.append(f"wit={ts.wit.text()}" if ts.wit is not None else "wit=none")
    for m, c in terms:
        lines.append(f"{ctext(c)}\t{mono_text(m, dump=True)}")
    if truncated:
        lines.append("...")
    return "\n".join(lines) + "\n"
