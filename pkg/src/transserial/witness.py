"""The addendum factory.

Every construction here enlarges a ratio set so that a derived object
(a smallness claim, a derivative, a composite, a Taylor difference, a
mean-value difference) is again generated or witnessed.  Where a proof
reduces to a finite list of requirements, the factory adds exactly the
listed monomials, processed in decreasing order with already-implied
ratios skipped, so outputs are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key

from . import config, grid as gridmod, series as srs
from .certificates import Checked, Proven, combine, proven
from .errors import BudgetExhausted, NotSmall, PreconditionViolation
from .grid import Grid, Member, RatioSet, UnknownMembership
from .monomial import (
    GT,
    LT,
    ONE,
    Monomial,
    X,
    ell_prime,
    mono_cmp,
    mono_inv,
    mono_log,
    mono_mul,
    mono_shift,
    mono_sign,
)
from .rationals import QZERO, cdiv, cneg
from .series import (
    Transseries,
    Witness,
    force_prefix,
    leading_term,
    probe_finite,
    scale_series,
    small_witness,
    series_witness,
    ts_add,
    ts_neg,
    zero,
)


@dataclass(frozen=True)
class Addendum:
    kind: str
    input: RatioSet
    output: RatioSet
    trace: tuple
    cert: object

    def text(self) -> str:
        return (f"addendum[{self.kind}] {self.input.text()} -> "
                f"{self.output.text()} {self.cert.text()} via {';'.join(self.trace)}")


def _calculus():
    from . import calculus

    return calculus


# ---------------------------------------------------------------------------
# requirement collector

class _Requirements:
    """Accumulates candidate ratio monomials; `build` adds them largest
    first, skipping ratios already generated by what was kept."""

    def __init__(self):
        self.cands: list[Monomial] = []
        self.cert = proven()

    def add_mono(self, m: Monomial):
        if m is not ONE and mono_sign(m) < 0:
            self.cands.append(m)

    def witness_series(self, t: Transseries, rule: str):
        w = series_witness(t)
        for m in w.ratios:
            self.add_mono(m)
        self.cert = combine(self.cert, w.cert, rule)

    def small_series(self, t: Transseries, rule: str):
        w = small_witness(t)
        for m in w.ratios:
            self.add_mono(m)
        self.cert = combine(self.cert, w.cert, rule)

    def prec_series(self, a: Transseries, b: Transseries, rule: str):
        """Requirements making a ≺^out b certifiable."""
        la, lb = leading_term(a), leading_term(b)
        if la is None:
            return
        if lb is None:
            raise PreconditionViolation(f"{rule}: right side of ≺ is zero")
        self.witness_series(a, rule)
        self.add_mono(mono_mul(la[0], mono_inv(lb[0])))

    def build(self, seed: RatioSet | None = None) -> RatioSet:
        kept: list[Monomial] = list(seed) if seed is not None else []
        cands = []
        seen = set(kept)
        for m in self.cands:
            if m not in seen:
                seen.add(m)
                cands.append(m)
        cands.sort(key=cmp_to_key(mono_cmp), reverse=True)
        for m in cands:
            rs = RatioSet.from_monomials(kept) if kept else RatioSet(())
            if not isinstance(gridmod.monoid_member(m, rs), Member):
                kept.append(m)
        return RatioSet.from_monomials(kept) if kept else RatioSet(())


def _cover_ratios(out: list[Monomial], required: RatioSet):
    """Extend `out` so that its monoid contains every required element."""
    for m in required:
        rs = RatioSet.from_monomials(out) if out else RatioSet(())
        if not isinstance(gridmod.monoid_member(m, rs), Member):
            out.append(m)


# ---------------------------------------------------------------------------
# smallness

def smallness_addendum(t: Transseries, ratios: RatioSet) -> Addendum:
    """Augment a generating ratio set so it witnesses t ≺ 1."""
    head = leading_term(t)
    if head is None:
        return Addendum("smallness", ratios, ratios, ("zero_series",), proven())
    if mono_sign(head[0]) >= 0:
        raise NotSmall(f"series with magnitude {head[0]} is not ≺ 1")
    finite = probe_finite(t, t.budget)
    prefix = list(finite) if finite is not None else force_prefix(t, t.budget)
    supp = [m for m, _ in prefix]
    base = _containing_base(supp, ratios)
    extras: list[Monomial] = []
    if base is not None:
        alpha = gridmod.subgrid_witness(supp, Grid(ratios, base))
        extras = [m for m in alpha if m not in ratios]
    out = ratios.union(RatioSet.from_monomials(extras + [head[0]]))
    cert = proven("smallness_addendum") if finite is not None else \
        Checked(len(prefix), ("smallness_addendum",))
    return Addendum("smallness", ratios, out, ("subgrid_witness", "magnitude"), cert)


def _containing_base(supp, ratios: RatioSet):
    """Base vector placing every support monomial inside J^{μ,m}, if the
    ratio set generates them at all."""
    vecs = []
    for m in supp:
        sol = gridmod.group_member(m, ratios)
        if not isinstance(sol, Member):
            return None
        vecs.append(sol.exponents)
    if not vecs:
        return None
    return tuple(min(v[i] for v in vecs) for i in range(len(ratios)))


# ---------------------------------------------------------------------------
# exponent subgrids and heredity

def _grid_of_series(t: Transseries) -> Grid:
    finite = probe_finite(t, config.FINITE_PROBE)
    if finite is not None:
        return srs._exact_gen(list(finite)) if finite else Grid.empty()
    return srs.ensure_gen(t)


def exponent_subgrid(source) -> Grid:
    """Grid containing every monomial of every exponent L with x^b e^L in
    the source (a Grid, ratio set, or list of monomials)."""
    monos = _source_monomials(source)
    out = Grid.empty()
    for m in monos:
        if m.arg is not None:
            out = gridmod.grid_union(out, _grid_of_series(m.arg))
    return out


def _source_monomials(source):
    if isinstance(source, Grid):
        return list(source.ratios)
    if isinstance(source, RatioSet):
        return list(source)
    return list(source)


def exponent_generator(source) -> RatioSet:
    """A ratio set generating every exponent series of the source."""
    monos = _source_monomials(source)
    gens: list[Monomial] = []
    for m in monos:
        if m.arg is None:
            continue
        finite = probe_finite(m.arg, config.FINITE_PROBE)
        terms = list(finite) if finite is not None else force_prefix(m.arg, 16)
        for g, _ in terms:
            small = g if mono_sign(g) < 0 else mono_inv(g)
            if small is not ONE and small not in gens:
                gens.append(small)
    return RatioSet.from_monomials(gens) if gens else RatioSet(())


def heredity_addendum(A: Grid) -> Grid:
    """Hereditary log-free grid containing A, by height induction."""
    for m in A.ratios:
        if m.depth != 0:
            raise PreconditionViolation("heredity addendum needs a log-free grid")
    if all(m.arg is None for m in A.ratios):
        return A
    sub = exponent_subgrid(A)
    return gridmod.grid_union(A, heredity_addendum(sub))


# ---------------------------------------------------------------------------
# tsupp

def tsupp(obj) -> Grid:
    """The Taylor support as a covering grid."""
    if isinstance(obj, Monomial):
        return _tsupp_mono(obj)
    if isinstance(obj, RatioSet):
        out = Grid.empty()
        for m in obj:
            out = gridmod.grid_union(out, _tsupp_mono(m))
        return out
    if isinstance(obj, Transseries):
        finite = probe_finite(obj, config.FINITE_PROBE)
        if finite is not None:
            out = Grid.empty()
            for m, _ in finite:
                out = gridmod.grid_union(out, _tsupp_mono(m))
            return out
        return tsupp(srs.ensure_gen(obj).ratios)
    raise TypeError(f"tsupp of {type(obj).__name__}")


_XINV_GRID = None


def _xinv_grid() -> Grid:
    global _XINV_GRID
    if _XINV_GRID is None:
        from .monomial import mono_x

        _XINV_GRID = gridmod.embed_shifted_monoid(mono_x(-1), RatioSet(()))
    return _XINV_GRID


def _tsupp_mono(m: Monomial) -> Grid:
    from .monomial import mono_x

    if m is ONE:
        return Grid.empty()
    if m.depth == 0:
        if m.arg is None:
            return _xinv_grid()
        lprime = _calculus().raw_derive(m.arg)
        out = gridmod.grid_union(_grid_of_series(lprime), _xinv_grid())
        finite = probe_finite(m.arg, config.FINITE_PROBE)
        terms = list(finite) if finite is not None else force_prefix(m.arg, 16)
        for g, _ in terms:
            out = gridmod.grid_union(out, _tsupp_mono(g))
        return out
    # depth clause: tsupp(g∘log) = ((tsupp g)∘log)·x^{-1} ∪ {x^{-1}}
    inner = _tsupp_mono(mono_shift(m, 1))
    shifted_ratios = [mono_shift(g, -1) for g in inner.ratios]
    shifted = Grid(RatioSet.from_monomials(shifted_ratios),
                   _realign_base(inner, shifted_ratios))
    scaled = gridmod.grid_product(shifted, _xinv_grid())
    return gridmod.grid_union(scaled, _xinv_grid())


def _realign_base(grid: Grid, shifted_ratios) -> tuple:
    order = {m: b for m, b in zip((mono_shift(g, -1) for g in grid.ratios), grid.base)}
    rs = RatioSet.from_monomials(shifted_ratios)
    return tuple(order.get(m, 0) for m in rs)


def tsupp_max(obj):
    """Maximum element of the Taylor support (None when it is empty)."""
    if isinstance(obj, Monomial):
        return _tsupp_max_mono(obj)
    if isinstance(obj, RatioSet):
        best = None
        for m in obj:
            cand = _tsupp_max_mono(m)
            best = _mono_max_opt(best, cand)
        return best
    if isinstance(obj, Transseries):
        finite = probe_finite(obj, config.FINITE_PROBE)
        if finite is not None:
            best = None
            for m, _ in finite:
                best = _mono_max_opt(best, _tsupp_max_mono(m))
            return best
        return tsupp_max(srs.ensure_gen(obj).ratios)
    raise TypeError(f"tsupp_max of {type(obj).__name__}")


def _mono_max_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if mono_cmp(a, b) != LT else b


def _tsupp_max_mono(m: Monomial):
    from .monomial import mono_x

    if m is ONE:
        return None
    xinv = mono_x(-1)
    if m.depth == 0:
        if m.arg is None:
            return xinv
        lprime = _calculus().raw_derive(m.arg)
        head = leading_term(lprime)
        best = xinv if head is None else _mono_max_opt(xinv, head[0])
        finite = probe_finite(m.arg, config.FINITE_PROBE)
        terms = list(finite) if finite is not None else force_prefix(m.arg, 16)
        for g, _ in terms:
            best = _mono_max_opt(best, _tsupp_max_mono(g))
        return best
    inner = _tsupp_max_mono(mono_shift(m, 1))
    if inner is None:
        return xinv
    return _mono_max_opt(mono_mul(mono_shift(inner, -1), xinv), xinv)


# ---------------------------------------------------------------------------
# derivative addendum

def _pure_exponential(m: Monomial) -> bool:
    return m.depth == 0 and m.xexp == 0 and m.arg is not None


def derivative_addendum(mu: RatioSet) -> Addendum:
    """Ratio set α with α* ⊇ μ that generates and witnesses the
    derivative of every monomial of J^μ and transports ≺^μ to ≺^α."""
    if len(mu) == 0:
        return Addendum("derivative", mu, mu, ("empty",), proven())
    if all(_pure_exponential(m) for m in mu):
        out, cert = _derivative_addendum_pure(mu)
        return Addendum("derivative", mu, out, ("pure_exponential",), cert)
    depth = max(m.depth for m in mu) + 1
    lifted = RatioSet.from_monomials([mono_shift(m, depth) for m in mu])
    inner, cert = _derivative_addendum_pure(lifted)
    down = [mono_shift(m, -depth) for m in inner]
    down.append(ell_prime(depth))
    out = RatioSet.from_monomials(down)
    return Addendum("derivative", mu, out,
                    (f"conjugate_exp_{depth}", "pure_exponential", "log_tower_derivative"),
                    cert)


def _derivative_addendum_pure(mu: RatioSet):
    """Stage for μ = {e^{L_1} ≻ ... ≻ e^{L_n}} with log-free L_i."""
    calculus = _calculus()
    logs = [mono_log(m) for m in mu]
    derivs = [calculus.raw_derive(L) for L in logs]
    mags, cert = _magnitude_echelon(derivs)
    req = _Requirements()
    req.cert = cert
    supports = []
    for d in derivs:
        finite = probe_finite(d, config.FINITE_PROBE)
        terms = list(finite) if finite is not None else force_prefix(d, 16)
        if finite is None:
            req.cert = combine(req.cert, Checked(len(terms)), "support_prefix")
        supports.extend(m for m, _ in terms)
    supports = _dedupe(supports)
    # witnessing requirements: everything under a magnitude divides into it
    for g in mags:
        ginv = mono_inv(g)
        for m in supports:
            if mono_cmp(m, g) == LT:
                req.add_mono(mono_mul(m, ginv))
    # comparison requirements: mag(P) beats mag(Q)·μ_j whenever both lie
    # at or under mag(L_j')
    for j, d in enumerate(derivs):
        head = leading_term(d)
        if head is None:
            continue
        cap = head[0]
        small = [g for g in mags if mono_cmp(g, cap) != GT]
        for ga in small:
            for gb in small:
                req.add_mono(mono_mul(mono_mul(gb, mu.monos[j]), mono_inv(ga)))
    kept = list(req.build())
    _cover_ratios(kept, mu)
    # generation of the magnitudes themselves
    for g in mags:
        rs = RatioSet.from_monomials(kept) if kept else RatioSet(())
        if not isinstance(gridmod.group_member(g, rs), Member):
            kept.append(g if mono_sign(g) < 0 else mono_inv(g))
    return RatioSet.from_monomials(kept), req.cert


def _dedupe(monos):
    seen = set()
    out = []
    for m in monos:
        if m not in seen:
            seen.add(m)
            out.append(m)
    return out


def _magnitude_echelon(series_list):
    """The finitely many magnitudes among rational combinations of the
    given series, by leading-term elimination."""
    work = []
    cert = proven("support_lemma")
    for t in series_list:
        head = leading_term(t)
        if head is not None:
            work.append(t)
    mags = []
    while work:
        heads = [leading_term(t) for t in work]
        top = None
        for h in heads:
            top = h[0] if top is None or mono_cmp(h[0], top) == GT else top
        mags.append(top)
        pivot = None
        rest = []
        for t, h in zip(work, heads):
            if pivot is None and h[0] is top:
                pivot = (t, h[1])
                continue
            rest.append((t, h))
        reduced = []
        for t, h in rest:
            if h[0] is top:
                factor = cdiv(h[1], pivot[1])
                t2 = ts_add(t, scale_series(pivot[0], cneg(factor)))
                try:
                    if leading_term(t2) is not None:
                        reduced.append(t2)
                except BudgetExhausted:
                    cert = combine(cert, Checked(0), "echelon_budget")
            else:
                reduced.append(t)
        work = reduced
    return mags, cert


# ---------------------------------------------------------------------------
# composition addendum

def composition_addendum(mu: RatioSet, s: Transseries):
    """(α, β) for right composition with s: α witnesses the small part of
    each L_i∘s, β adds the monomials e^{large(L_i∘s)}."""
    from . import compose as compmod

    head = leading_term(s)
    if head is None or mono_sign(head[0]) <= 0:
        raise PreconditionViolation("composition addendum needs s ≻ 1")
    alpha_monos: list[Monomial] = []
    beta_monos: list[Monomial] = []
    cert = proven("composition_addendum")
    for m in mu:
        L = mono_log(m)
        comp = compmod.compose(L, s, certify=False)
        dec = srs.ts_decompose(comp)
        w = small_witness(dec.small)
        cert = combine(cert, w.cert, "small_part")
        alpha_monos.extend(w.ratios)
        emono = srs._mono_exp(dec.large)
        if emono is not ONE:
            beta_monos.append(emono if mono_sign(emono) < 0 else mono_inv(emono))
    alpha = RatioSet.from_monomials(_dedupe(alpha_monos)) if alpha_monos else RatioSet(())
    beta = alpha.union(RatioSet.from_monomials(_dedupe(beta_monos))) if beta_monos else alpha
    return (Addendum("composition_alpha", mu, alpha, ("small_parts",), cert),
            Addendum("composition", mu, beta, ("small_parts", "large_exponentials"), cert))


# ---------------------------------------------------------------------------
# Taylor addendum

def taylor_addendum(mu: RatioSet) -> Addendum:
    """Derivative addendum strengthened so order-1 Taylor comparison is
    witnessed: x^{-1} ≺ L' for the exponents of J^μ, recursively through
    an exponent generator."""
    if len(mu) == 0:
        return Addendum("taylor", mu, mu, ("empty",), proven())
    depth = max(m.depth for m in mu)
    if depth > 0:
        lifted = RatioSet.from_monomials([mono_shift(m, depth) for m in mu])
        inner = taylor_addendum(lifted)
        deriv = derivative_addendum(mu)
        down = [mono_shift(m, -depth) for m in inner.output]
        out = RatioSet.from_monomials(_dedupe(down)).union(deriv.output)
        return Addendum("taylor", mu, out,
                        (f"conjugate_exp_{depth}",) + inner.trace,
                        combine(inner.cert, deriv.cert, "taylor_depth"))
    out, trace, cert = _taylor_log_free(mu)
    return Addendum("taylor", mu, out, trace, cert)


def _taylor_log_free(mu: RatioSet):
    calculus = _calculus()
    deriv = derivative_addendum(mu)
    if all(m.arg is None for m in mu):
        return deriv.output, ("derivative_addendum", "height_zero"), deriv.cert
    gen = exponent_generator(mu)
    inner = taylor_addendum(gen)
    req = _Requirements()
    req.cert = combine(deriv.cert, inner.cert, "taylor_recursion")
    logs = [mono_log(m) for m in mu]
    mags, cert2 = _magnitude_echelon(logs)
    req.cert = combine(req.cert, cert2, "exponent_magnitudes")
    supports = []
    for L in logs:
        finite = probe_finite(L, config.FINITE_PROBE)
        terms = list(finite) if finite is not None else force_prefix(L, 16)
        supports.extend(m for m, _ in terms)
    supports = _dedupe(supports)
    from .monomial import mono_x

    xinv = mono_x(-1)
    for g in mags:
        # g ≻ 1 must be α-witnessed: 1 ≺^α g
        req.add_mono(mono_inv(g))
        ginv = mono_inv(g)
        for m in supports:
            if mono_cmp(m, g) == LT:
                req.add_mono(mono_mul(m, ginv))
        gprime = calculus.raw_derive(srs.ts_mono(g))
        req.witness_series(gprime, "magnitude_derivative")
        head = leading_term(gprime)
        if head is not None:
            req.add_mono(mono_mul(xinv, mono_inv(head[0])))
    seed = deriv.output.union(inner.output)
    out = req.build(seed=list(seed))
    return out, ("derivative_addendum", "exponent_generator", "taylor_requirements"), req.cert


# ---------------------------------------------------------------------------
# mean value addenda

def mvt_addendum(mu: RatioSet, s1: Transseries, s2: Transseries,
                 mode: str = "general", upper=None) -> Addendum:
    """Ratio set transporting witnessed ≺ through evaluation differences
    a(S2) - a(S1)."""
    from . import compose as compmod

    diff = ts_add(s2, ts_neg(s1))
    head = leading_term(diff)
    if head is None or (isinstance(head[1], Fraction) and head[1] <= 0):
        raise PreconditionViolation("mean value addendum needs S1 < S2")
    if len(mu) == 0:
        return Addendum("mvt", mu, mu, ("empty",), proven())
    evals1 = [compmod.compose(srs.ts_mono(m), s1, certify=False) for m in mu]
    evals2 = [compmod.compose(srs.ts_mono(m), s2, certify=False) for m in mu]
    req = _Requirements()
    if mode == "fixed_upper":
        if upper is None:
            raise PreconditionViolation("fixed_upper mode needs the upper monomial")
        bdiff = ts_add(compmod.compose(srs.ts_mono(upper), s2, certify=False),
                       ts_neg(compmod.compose(srs.ts_mono(upper), s1, certify=False)))
        b1 = compmod.compose(srs.ts_mono(upper), s1, certify=False)
        for i, m in enumerate(mu):
            req.small_series(evals1[i], "value_small_s1")
            req.small_series(evals2[i], "value_small_s2")
            inc = ts_add(evals2[i], ts_neg(evals1[i]))
            req.prec_series(srs.ts_mul(b1, inc), bdiff, "difference_transport")
        out = req.build()
        return Addendum("mvt", mu, out, ("fixed_upper",), req.cert)
    # general mode: the requirement list behind the mean value transport
    diffs = []
    for i, m in enumerate(mu):
        L = mono_log(m)
        dL = ts_add(compmod.compose(L, s2, certify=False),
                    ts_neg(compmod.compose(L, s1, certify=False)))
        diffs.append(dL)
    mags, cert2 = _magnitude_echelon(diffs)
    req.cert = combine(req.cert, cert2, "difference_magnitudes")
    incs = []
    for i, m in enumerate(mu):
        req.witness_series(evals1[i], "value_witness_s1")
        req.witness_series(evals2[i], "value_witness_s2")
        inc = ts_add(evals1[i], ts_neg(evals2[i]))
        incs.append(inc)
        req.witness_series(inc, "value_difference_witness")
        req.small_series(evals1[i], "value_small_s1")
        req.small_series(evals2[i], "value_small_s2")
        for g in mags:
            req.prec_series(inc, srs.ts_mono(g), "difference_below_magnitude")
    for i in range(len(mu)):
        for k in range(len(mu)):
            if i == k:
                continue
            hi, hk = leading_term(incs[i]), leading_term(incs[k])
            if hi is None or hk is None:
                continue
            if mono_cmp(hk[0], hi[0]) == LT:
                req.prec_series(incs[k], incs[i], "difference_order")
    out = req.build()
    return Addendum("mvt", mu, out, ("general",), req.cert)
