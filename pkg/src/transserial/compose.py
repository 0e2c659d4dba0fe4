"""Right composition, the fixed-point engine, compositional inversion,
and order-1 Taylor comparison.

Composition is termwise: a monomial x^b e^L ∘ log_M applied to s becomes
w^b · exp(L∘w) with w = log_M(s), recursing on height.  The inverse runs
the classical stratified pipeline: conjugate until the series is ~ x,
split off the top-height part, and solve each stratum by a certified
fixed point of B ↦ -A∘(x+B).  The fixed point itself is a lazily
stabilizing stream: a term is emitted once the pending increment has
fallen strictly below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import config, grid as gridmod, series as srs
from .calculus import mono_derivative, raw_derive
from .certificates import Checked, Proven, combine, proven
from .errors import (
    BudgetExhausted,
    HypothesisViolation,
    KernelBug,
    NonContraction,
    NotLargePositive,
    PreconditionViolation,
)
from .grid import Grid, Member, RatioSet
from .monomial import (
    GT,
    LT,
    ONE,
    Monomial,
    X,
    ell,
    exp_tower,
    mono_cmp,
    mono_inv,
    mono_mul,
    mono_shift,
    mono_sign,
)
from .rationals import QONE, QZERO, ceq, cis_zero, cmul, csign
from .series import (
    Transseries,
    Witness,
    ladder,
    lazy,
    leading_term,
    map_monomials,
    probe_finite,
    scale_series,
    series_witness,
    small_witness,
    ts_add,
    ts_const,
    ts_decompose,
    ts_exp,
    ts_log,
    ts_mono,
    ts_mul,
    ts_neg,
    ts_power,
    ts_x,
    zero,
)


def _require_large_positive(s: Transseries):
    head = leading_term(s)
    if head is None or mono_sign(head[0]) <= 0 or csign(head[1]) <= 0:
        raise NotLargePositive("composition needs a large positive right argument")
    return head


def _tower_index(m: Monomial) -> Optional[int]:
    """k when m = exp_k (x for k = 0), else None."""
    if m is X:
        return 0
    if m.depth != 0 or m.xexp != 0 or m.arg is None:
        return None
    finite = probe_finite(m.arg, 4)
    if finite is None or len(finite) != 1:
        return None
    inner, c = finite[0]
    if not (isinstance(c, Fraction) and c == 1):
        return None
    k = _tower_index(inner)
    return None if k is None else k + 1


def _single_unit_term(s: Transseries) -> Optional[Monomial]:
    finite = probe_finite(s, 2)
    if finite is None or len(finite) != 1:
        return None
    m, c = finite[0]
    if isinstance(c, Fraction) and c == 1:
        return m
    return None


class _LogCache:
    """Iterated logarithms of the right argument."""

    def __init__(self, s: Transseries):
        self._tower = [s]

    def get(self, depth: int) -> Transseries:
        while len(self._tower) <= depth:
            self._tower.append(ts_log(self._tower[-1]))
        return self._tower[depth]


def compose(t: Transseries, s: Transseries, certify: bool = True) -> Transseries:
    """t ∘ s for large positive s."""
    _require_large_positive(s)
    unit = _single_unit_term(s)
    if unit is not None:
        if unit is X:
            return t
        if unit.arg is None and unit.xexp == 1:
            # s = log_k(x): pure depth shift
            return _shift_series(t, -unit.depth)
        k = _tower_index(unit)
        if k is not None:
            return _shift_series(t, k)
    logs = _LogCache(s)

    def sources():
        for m, c in t.stream.iter_terms():
            comp = _mono_compose(m, logs)
            yield _scaled_terms(comp, c)

    out = lazy(lambda: ladder(sources()), budget=max(t.budget, s.budget))
    if certify:
        _certify_compose(out, t, s)
    return out


def _shift_series(t: Transseries, k: int) -> Transseries:
    if k == 0:
        return t
    out = map_monomials(t, lambda m: mono_shift(m, k))
    out.budget = t.budget
    if t.gen is not None:
        ratios = RatioSet.from_monomials([mono_shift(m, k) for m in t.gen.ratios])
        out.gen = Grid(ratios, _permuted_base(t.gen, ratios, k))
    if t.wit is not None:
        wr = RatioSet.from_monomials([mono_shift(m, k) for m in t.wit.ratios])
        out.wit = Witness(wr, t.wit.small, t.wit.cert)
    return out


def _permuted_base(gen: Grid, ratios: RatioSet, k: int) -> tuple:
    look = {mono_shift(m, k): b for m, b in zip(gen.ratios, gen.base)}
    return tuple(look.get(m, 0) for m in ratios)


def _scaled_terms(ts: Transseries, c):
    for m, d in ts.stream.iter_terms():
        yield (m, cmul(c, d))


def _mono_compose(m: Monomial, logs: _LogCache) -> Transseries:
    if m is ONE:
        return ts_const(1)
    w = logs.get(m.depth)
    base = None
    if m.xexp != 0:
        base = ts_power(w, m.xexp)
    if m.arg is not None:
        inner = compose(srs.Transseries(m.arg.stream), w, certify=False)
        e = ts_exp(inner)
        return e if base is None else ts_mul(base, e)
    return base if base is not None else ts_const(1)


def _certify_compose(out: Transseries, t: Transseries, s: Transseries):
    from . import witness as witmod

    if t.gen is None:
        return
    try:
        ratios = t.gen.ratios
        if t.wit is not None:
            ratios = ratios.union(t.wit.ratios)
        if len(ratios) == 0:
            out.gen = t.gen
            out.wit = t.wit
            return
        alpha, beta = witmod.composition_addendum(ratios, s)
        corner = t.gen.base_monomial()
        if corner is ONE:
            out.gen = Grid.monoid(beta.output)
        else:
            chead = leading_term(_mono_compose(corner, _LogCache(s)))
            if chead is None:
                out.gen = Grid.monoid(beta.output)
            else:
                sol = gridmod.group_member(chead[0], beta.output)
                if isinstance(sol, Member):
                    out.gen = Grid(beta.output, sol.exponents)
                else:
                    out.gen = gridmod.embed_shifted_monoid(chead[0], beta.output)
        if t.wit is not None:
            out.wit = Witness(beta.output, False,
                              combine(t.wit.cert, beta.cert, "composition_witness"))
    except (BudgetExhausted, PreconditionViolation):
        pass


# ---------------------------------------------------------------------------
# fixed point

@dataclass
class FixedPointProblem:
    """Contraction data: Φ maps the domain into itself, the ratio set
    witnesses the seed and first increment, and increments descend."""

    phi: Callable[[Transseries], Transseries]
    ratios: RatioSet
    t0: Transseries
    domain: Optional[Callable[[Transseries], bool]] = None
    domain_text: str = ""
    check_descent: bool = True
    max_iterations: int = 0

    def validate_seed(self):
        from .calculus import _witness_fails

        if self.domain is not None and not self.domain(self.t0):
            raise HypothesisViolation("seed outside the domain")
        if _witness_fails(self.t0, self.ratios):
            raise HypothesisViolation("ratio set does not witness the seed")
        first = ts_add(self.phi(self.t0), ts_neg(self.t0))
        try:
            if leading_term(first) is not None and _witness_fails(first, self.ratios):
                raise HypothesisViolation("ratio set does not witness the first increment")
        except BudgetExhausted:
            pass


def _tail_view(ts: Transseries, skip: int) -> Transseries:
    def gen():
        i = skip
        while True:
            if ts.stream.force_len(i + 1) <= i:
                return
            yield ts.stream.at(i)
            i += 1

    return lazy(gen)


def fixed_point(problem: FixedPointProblem) -> Transseries:
    """Iterate Φ lazily; a term is final once the pending increment lies
    strictly below it.  Increments are compared on the tails past the
    already-stabilized prefix, so agreement never burns cancel budget."""
    problem.validate_seed()
    limit = problem.max_iterations or config.FIXED_POINT_ITERATIONS

    def gen():
        cur = problem.t0
        nxt = problem.phi(cur)
        iters = 0
        pos = 0
        prev_head = None
        fresh = False
        while True:
            d = ts_add(_tail_view(nxt, pos), ts_neg(_tail_view(cur, pos)))
            dh = leading_term(d)
            if dh is None:
                # nxt = cur exactly past the prefix: the fixed point is reached
                i = pos
                while True:
                    if nxt.stream.force_len(i + 1) <= i:
                        return
                    yield nxt.stream.at(i)
                    i += 1
            if fresh and prev_head is not None and problem.check_descent:
                if mono_cmp(dh[0], prev_head) != LT:
                    raise NonContraction(iters)
            fresh = False
            have = cur.stream.force_len(pos + 1) > pos
            if have:
                m, co = cur.stream.at(pos)
                if mono_cmp(m, dh[0]) == GT:
                    yield (m, co)
                    pos += 1
                    continue
            prev_head = dh[0]
            cur, nxt = nxt, problem.phi(nxt)
            iters += 1
            fresh = True
            if iters > limit:
                raise BudgetExhausted("fixed point iterations", limit)

    out = lazy(gen)
    out.wit = Witness(problem.ratios, False,
                      Checked(config.DEFAULT_TERMS, ("geometric_fixed_point",)))
    return out


# ---------------------------------------------------------------------------
# compositional inverse

def comp_inverse(t: Transseries) -> Transseries:
    """S with t∘S = x, by conjugating to the log-free ~x case and solving
    strata with fixed points."""
    _require_large_positive(t)
    # reduce until the dominant term is exactly one iterated logarithm
    u = t
    m = 0
    while True:
        head = leading_term(u)
        if head is None:
            raise KernelBug("inverse lost its leading term")
        mono, coeff = head
        if mono.arg is None and mono.xexp == 1 and ceq(coeff, QONE):
            p = mono.depth
            break
        if m > 3 + _height_bound(t):
            raise BudgetExhausted("inverse normalization", m)
        u = ts_log(u)
        m += 1
    v = compose(u, ts_mono(exp_tower(p)), certify=False) if p else u
    sv = _inverse_near_x(v)
    su = compose(ts_mono(exp_tower(p)), sv, certify=False) if p else sv
    s = _shift_series(su, -m) if m else su
    out = s
    if isinstance(out, Transseries):
        out.wit = out.wit or None
    return out


def _height_bound(t: Transseries) -> int:
    h = 0
    for mono, _ in t.terms(8):
        h = max(h, mono.height + mono.depth)
    return h


def _inverse_near_x(v: Transseries) -> Transseries:
    """Inverse of v ~ x (possibly with logarithmic depth)."""
    depth = 0
    for mono, _ in v.terms(v.budget):
        depth = max(depth, mono.depth)
    w = _shift_series(v, depth) if depth else v
    for _ in range(depth):
        w = ts_log(w)
    sw = _inverse_logfree_near_x(w)
    out = sw
    for _ in range(depth):
        out = ts_exp(out)
    if depth:
        out = _shift_series(out, -depth)
    return out


def _inverse_logfree_near_x(w: Transseries) -> Transseries:
    a = ts_add(w, ts_neg(ts_x()))
    try:
        ha = leading_term(a)
    except BudgetExhausted:
        ha = None
    if ha is None:
        return ts_x()
    heights = set()
    for mono, _ in a.terms(a.budget):
        heights.add(mono.height)
    n = max(heights)
    if n == 0 or len(heights) == 1:
        return ts_add(ts_x(), _invert_stratum(a))
    low = _filter_by_height(a, lambda h: h < n)
    high = _filter_by_height(a, lambda h: h == n)
    xb0 = _inverse_logfree_near_x(ts_add(ts_x(), low))
    b0 = ts_add(xb0, ts_neg(ts_x()))
    c = compose(high, xb0, certify=False)
    d = _invert_stratum(c)
    e = ts_add(d, compose(b0, ts_add(ts_x(), d), certify=False))
    return ts_add(ts_x(), e)


def _filter_by_height(t: Transseries, keep) -> Transseries:
    def gen():
        for mono, c in t.stream.iter_terms():
            if keep(mono.height):
                yield (mono, c)

    out = lazy(gen, gen=t.gen, budget=t.budget)
    return out


def _invert_stratum(a: Transseries) -> Transseries:
    """B with (x+a)∘(x+B) = x, via the contraction B ↦ -a∘(x+B)."""
    from . import witness as witmod

    try:
        ha = leading_term(a)
    except BudgetExhausted:
        ha = None
    if ha is None:
        return zero()
    mu = srs.ensure_gen(a).ratios
    try:
        wa = series_witness(a)
        mu = mu.union(wa.ratios)
    except BudgetExhausted:
        pass
    beta = witmod.taylor_addendum(mu).output
    mag = ha[0]

    def in_domain(b: Transseries) -> bool:
        hb = leading_term(b)
        if hb is None:
            return False
        return hb[0] is mag and csign(hb[1]) == -csign(ha[1])

    xplus = ts_x()

    def phi(b: Transseries) -> Transseries:
        return ts_neg(compose(a, ts_add(xplus, b), certify=False))

    problem = FixedPointProblem(
        phi=phi,
        ratios=beta,
        t0=ts_neg(a),
        domain=in_domain,
        domain_text=f"supp B ≼ {mag}, B ~ -({ha[1]})·{mag}",
    )
    out = fixed_point(problem)
    out.gen = gridmod.embed_shifted_monoid(mag, beta)
    return out


# ---------------------------------------------------------------------------
# Taylor order 1

@dataclass
class TaylorReport:
    holds: bool
    lhs_dom: object
    rhs_dom: object
    certificate: object
    witness: object = None
    side_conditions: dict = field(default_factory=dict)

    def text(self) -> str:
        from .monomial import mono_text
        from .rationals import ctext

        def show(dom):
            if dom is None:
                return "0"
            return f"{ctext(dom[1])}*{mono_text(dom[0])}"

        verdict = "~" if self.holds else "NOT ~"
        out = (f"taylor1 {verdict} lhs={show(self.lhs_dom)} "
               f"rhs={show(self.rhs_dom)} [{self.certificate.text()}]")
        for name, ok in self.side_conditions.items():
            out += f"\n  {name}: {'ok' if ok else 'FAILED'}"
        return out


def taylor1(t: Transseries, s: Transseries, u1: Transseries, u2: Transseries,
            witnessed: bool = False) -> TaylorReport:
    """Certify T(S+U1) - T(S+U2) ~ T'(S)·(U1-U2) under the Taylor-support
    precondition."""
    from . import witness as witmod

    _require_large_positive(s)
    dec = ts_decompose(t)
    core = ts_add(dec.large, dec.small)
    tmax = witmod.tsupp_max(core)
    if tmax is not None:
        bound = leading_term(compose(ts_mono(tmax), s, certify=False))
        if bound is None:
            raise KernelBug("taylor support lost its magnitude")
        for label, u in (("U1", u1), ("U2", u2)):
            hu = leading_term(u)
            if hu is None:
                continue
            prod = mono_mul(bound[0], hu[0])
            if mono_cmp(prod, ONE) != LT:
                raise PreconditionViolation(
                    f"taylor precondition: (tsupp T ∘ S)·{label} has magnitude {prod} ⊀ 1")
    du = ts_add(u1, ts_neg(u2))
    try:
        hdu = leading_term(du)
    except BudgetExhausted:
        hdu = None
    lhs = ts_add(compose(core, ts_add(s, u1), certify=False),
                 ts_neg(compose(core, ts_add(s, u2), certify=False)))
    rhs = ts_mul(compose(raw_derive(core), s, certify=False), du)
    if hdu is None:
        lz = _probe_zero(lhs)
        return TaylorReport(lz, None, None, proven("both_sides_zero"))
    hl = leading_term(lhs)
    hr = leading_term(rhs)
    holds = (hl is not None and hr is not None and hl[0] is hr[0]
             and ceq(hl[1], hr[1]))
    report = TaylorReport(holds, hl, hr, Checked(1, ("taylor1_leading",)))
    if witnessed and _single_unit_term(s) is X:
        mu = srs.ensure_gen(core).ratios
        try:
            mu = mu.union(series_witness(core).ratios)
        except BudgetExhausted:
            pass
        beta = witmod.taylor_addendum(mu).output
        try:
            dwit = series_witness(du)
            beta = beta.union(dwit.ratios)
        except BudgetExhausted:
            pass
        report.witness = beta
        report.side_conditions["witnesses_difference"] = not _witness_fails_series(lhs, beta)
        report.side_conditions["generates_difference"] = _generates_prefix(lhs, beta)
        hc = leading_term(core)
        if hc is not None and mono_cmp(hc[0], X) == LT:
            ratio = ts_mul(lhs, ts_power(du, Fraction(-1)))
            hq = leading_term(ratio)
            small_ok = hq is not None and mono_sign(hq[0]) < 0 and \
                isinstance(gridmod.monoid_member(hq[0], beta, strict=True), Member)
            report.side_conditions["quotient_small"] = small_ok
    return report


def _probe_zero(t: Transseries) -> bool:
    try:
        return leading_term(t) is None
    except BudgetExhausted:
        return True


def _witness_fails_series(t: Transseries, ratios: RatioSet) -> bool:
    from .calculus import _witness_fails

    try:
        return _witness_fails(t, ratios)
    except BudgetExhausted:
        return False


def _generates_prefix(t: Transseries, ratios: RatioSet) -> bool:
    try:
        terms = t.terms(8)
    except BudgetExhausted:
        terms = t.stream.known()
    for m, _ in terms:
        if not isinstance(gridmod.group_member(m, ratios), Member):
            return False
    return True
