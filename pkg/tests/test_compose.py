import random
from fractions import Fraction as F

import pytest

from transserial import compose as CP
from transserial import series as srs
from transserial.calculus import derive
from transserial.errors import (
    HypothesisViolation,
    NonContraction,
    NotLargePositive,
    PreconditionViolation,
)
from transserial.grid import Member, RatioSet, monoid_member
from transserial.monomial import (
    ONE,
    X,
    ell,
    exp_tower,
    make_mono,
    mono_mul,
    mono_pow,
)
from transserial.rationals import ceq
from transserial.series import (
    empty_prefix,
    leading_term,
    ts_add,
    ts_const,
    ts_exp,
    ts_from_terms,
    ts_mono,
    ts_mul,
    ts_neg,
    ts_x,
)

from conftest import RandomSeries, assert_empty, assert_prefix_equal, e_pow, mono_exp_of, prefix_terms


def xp(q):
    return make_mono(0, F(q), None)


def test_compose_identity_laws():
    s = ts_add(ts_x(), ts_mono(xp(-1)))
    assert_prefix_equal(CP.compose(ts_x(), s), s, 4)
    assert CP.compose(s, ts_x()) is s


def test_compose_tower_collapse():
    assert prefix_terms(CP.compose(ts_mono(exp_tower(1)), ts_mono(ell(1))), 2) == \
        [(X, F(1))]


def test_compose_geometric():
    c = CP.compose(ts_mono(xp(-1)), ts_add(ts_x(), ts_const(1)))
    expect = [(mono_pow(xp(-1), F(j)), F((-1) ** (j + 1))) for j in range(1, 6)]
    assert prefix_terms(c, 5) == expect


def test_compose_exp_path_oracle():
    c = CP.compose(ts_mono(e_pow(-1)), ts_add(ts_x(), ts_mono(xp(-1))))
    oracle = ts_exp(ts_add(ts_mono(X, F(-1)), ts_mono(xp(-1), F(-1))))
    assert_prefix_equal(c, oracle, 10, "exp path")


def test_compose_requires_large_positive():
    with pytest.raises(NotLargePositive):
        CP.compose(ts_x(), ts_mono(xp(-1)))
    with pytest.raises(NotLargePositive):
        CP.compose(ts_x(), ts_mono(X, F(-1)))


def test_compose_associativity_prefixes():
    t = ts_add(ts_mono(xp(-1)), ts_mono(e_pow(-1)))
    s = ts_add(ts_x(), ts_mono(xp(-1)))
    u = ts_add(ts_x(), ts_const(1))
    lhs = CP.compose(CP.compose(t, s, certify=False), u, certify=False)
    rhs = CP.compose(t, CP.compose(s, u, certify=False), certify=False)
    assert_prefix_equal(lhs, rhs, 8, "associativity")


def test_chain_rule_prefixes():
    rng = RandomSeries(8)
    for _ in range(8):
        t = rng.series(2, height=1)
        s = ts_add(ts_x(), rng.series(2, height=1, small=True))
        lhs = derive(CP.compose(t, s, certify=False))
        rhs = ts_mul(CP.compose(derive(t), s, certify=False), derive(s))
        assert_prefix_equal(lhs, rhs, 8, "chain rule")


def test_compose_witness_certificates():
    t = ts_from_terms([(xp(-1), F(1)), (mono_mul(xp(-1), e_pow(-1)), F(2))])
    s = ts_add(ts_x(), ts_mono(xp(-1)))
    out = CP.compose(t, s)
    assert out.wit is not None
    assert not srs.validate_prefix(out, 6)


def test_compomono_transport_sampled():
    mu = RatioSet.from_monomials([xp(-1), e_pow(-1)])
    s = ts_add(ts_x(), ts_const(1))
    from transserial.witness import composition_addendum

    _, beta = composition_addendum(mu, s)
    rng = random.Random(4)
    from transserial.series import ts_compare

    for _ in range(10):
        ka = (rng.randint(0, 3), rng.randint(0, 3))
        kb = (rng.randint(0, ka[0]), rng.randint(0, ka[1]))
        if ka == kb:
            continue
        a = mono_mul(mono_pow(xp(-1), F(ka[0])), mono_pow(e_pow(-1), F(ka[1])))
        b = mono_mul(mono_pow(xp(-1), F(kb[0])), mono_pow(e_pow(-1), F(kb[1])))
        ca = CP.compose(ts_mono(a), s, certify=False)
        cb = CP.compose(ts_mono(b), s, certify=False)
        rep = ts_compare(ca, cb, beta.output)
        assert rep.certificate.ok, (ka, kb)


# -- fixed point ----------------------------------------------------------------

def test_fixed_point_constant_map():
    b0 = ts_mono(xp(-1), F(3))
    problem = CP.FixedPointProblem(phi=lambda b: b0,
                                   ratios=RatioSet.from_monomials([xp(-1)]),
                                   t0=b0)
    out = CP.fixed_point(problem)
    assert prefix_terms(out, 2) == [(xp(-1), F(3))]


def test_fixed_point_inverse_offset():
    a = ts_mono(xp(-1))
    problem = CP.FixedPointProblem(
        phi=lambda b: ts_neg(CP.compose(a, ts_add(ts_x(), b), certify=False)),
        ratios=RatioSet.from_monomials([xp(-1)]),
        t0=ts_neg(a))
    b = CP.fixed_point(problem)
    full = CP.compose(ts_add(ts_x(), a), ts_add(ts_x(), b), certify=False)
    residual = ts_add(full, ts_neg(ts_x()))
    # check to 20 terms
    got = prefix_terms(b, 4)
    assert got[0] == (xp(-1), F(-1))
    assert_empty(residual, "fixed point residual")


def test_fixed_point_exponential_seed():
    a = ts_mono(e_pow(-1))
    problem = CP.FixedPointProblem(
        phi=lambda b: ts_neg(CP.compose(a, ts_add(ts_x(), b), certify=False)),
        ratios=RatioSet.from_monomials([e_pow(-1), xp(-1)]),
        t0=ts_neg(a))
    b = CP.fixed_point(problem)
    head = leading_term(b)
    assert head == (e_pow(-1), F(-1))
    residual = ts_add(CP.compose(ts_add(ts_x(), a), ts_add(ts_x(), b), certify=False),
                      ts_neg(ts_x()))
    assert_empty(residual, "exp fixed point residual")


def test_fixed_point_hypothesis_validation():
    problem = CP.FixedPointProblem(
        phi=lambda b: b,
        ratios=RatioSet.from_monomials([xp(-1)]),
        t0=ts_mono(e_pow(-1)),
        domain=lambda b: False)
    with pytest.raises(HypothesisViolation):
        CP.fixed_point(problem)


# -- compositional inverse ---------------------------------------------------------

def naive_reversion_oracle(exponent_coeffs, nterms):
    """Independent series reversion for T = x + sum c_e x^{-e}: iterate
    B <- -A(x+B) on truncated exponent dictionaries."""

    def mul(p, q, cut):
        out = {}
        for ea, ca in p.items():
            for eb, cb in q.items():
                e = ea + eb
                if e < -cut:
                    continue
                out[e] = out.get(e, F(0)) + ca * cb
        return {e: c for e, c in out.items() if c}

    def add(p, q):
        out = dict(p)
        for e, c in q.items():
            out[e] = out.get(e, F(0)) + c
        return {e: c for e, c in out.items() if c}

    def power_of_x_plus_b(b, exp, cut):
        # (x + B)^{-exp} = x^{-exp} (1 + B/x)^{-exp}, expanded to cut
        bx = {e - 1: c for e, c in b.items()}
        acc = {0: F(1)}
        term = {0: F(1)}
        binom = F(1)
        for j in range(1, cut + 3):
            binom *= F(-exp - (j - 1), j)
            term = mul(term, bx, cut)
            if not term:
                break
            acc = add(acc, {e: binom * c for e, c in term.items()})
        return {e - exp: c for e, c in acc.items()}

    cut = nterms + 2
    b = {}
    for _ in range(nterms + 2):
        nxt = {}
        for e, c in exponent_coeffs.items():
            nxt = add(nxt, {ee: -c * cc for ee, cc in
                            power_of_x_plus_b(b, e, cut).items()})
        b = nxt
    return b


def test_inverse_linear_shift():
    s = CP.comp_inverse(ts_add(ts_x(), ts_const(1)))
    assert prefix_terms(s, 3) == [(X, F(1)), (ONE, F(-1))]


def test_inverse_x_plus_xinv_against_oracle():
    t = ts_add(ts_x(), ts_mono(xp(-1)))
    s = CP.comp_inverse(t)
    got = prefix_terms(s, 11)
    oracle = naive_reversion_oracle({1: F(1)}, 22)
    assert got[0] == (X, F(1))
    for m, c in got[1:]:
        assert m.arg is None and m.depth == 0
        e = m.xexp
        assert oracle.get(e, F(0)) == c, (e, c, oracle.get(e))
    # every oracle coefficient down to x^{-19} appears
    for e, c in sorted(oracle.items(), reverse=True):
        if e >= -19:
            assert any(m.xexp == e and cc == c for m, cc in got[1:]), (e, c)


def test_inverse_round_trips_two_sided():
    t = ts_add(ts_x(), ts_mono(xp(-1)))
    s = CP.comp_inverse(t)
    assert_empty(ts_add(CP.compose(t, s, certify=False), ts_neg(ts_x())), "T∘S - x")
    assert_empty(ts_add(CP.compose(s, t, certify=False), ts_neg(ts_x())), "S∘T - x")


def test_inverse_exponential():
    s = CP.comp_inverse(ts_mono(exp_tower(1)))
    assert prefix_terms(s, 2) == [(ell(1), F(1))]
    s2 = CP.comp_inverse(ts_mono(ell(1)))
    assert prefix_terms(s2, 2) == [(exp_tower(1), F(1))]


def test_inverse_with_exponentially_small_part():
    t = ts_add(ts_x(), ts_mono(e_pow(-1)))
    s = CP.comp_inverse(t)
    head = prefix_terms(s, 2)
    assert head[0] == (X, F(1))
    assert head[1] == (e_pow(-1), F(-1))
    assert_empty(ts_add(CP.compose(t, s, certify=False), ts_neg(ts_x())),
                 "x+e^-x inverse residual")


def test_inverse_scaled_input():
    t = ts_mono(X, F(2))
    s = CP.comp_inverse(t)
    assert prefix_terms(s, 2) == [(X, F(1, 2))]


def test_inverse_mixed_heights():
    t = ts_add(ts_add(ts_x(), ts_mono(xp(-1), F(2))),
               ts_mono(mono_mul(xp(-1), e_pow(-1))))
    s = CP.comp_inverse(t)
    assert_empty(ts_add(CP.compose(t, s, certify=False), ts_neg(ts_x())),
                 "mixed height inverse")


def test_inverse_requires_large_positive():
    with pytest.raises(NotLargePositive):
        CP.comp_inverse(ts_mono(xp(-1)))


# -- taylor order 1 ------------------------------------------------------------------

def test_taylor_power_family():
    rep = CP.taylor1(ts_mono(xp(F(5, 2))), ts_x(), ts_mono(xp(-1)), srs.zero())
    assert rep.holds
    # expected leading: b x^{b-1} (U1-U2) = 5/2 x^{3/2} x^{-1}
    assert rep.lhs_dom[0] is xp(F(1, 2)) and rep.lhs_dom[1] == F(5, 2)


def test_taylor_rejects_log_with_large_increment():
    with pytest.raises(PreconditionViolation):
        CP.taylor1(ts_mono(ell(1)), ts_x(), ts_x(), srs.zero())


def test_taylor_general_composition_point():
    t = ts_mono(e_pow(-1))
    s = ts_mono(xp(2))
    rep = CP.taylor1(t, s, ts_mono(xp(-1)), srs.zero())
    assert rep.holds
    # two-sided expansion oracle: T'(S)·U1 dominates
    lhs = ts_add(CP.compose(t, ts_add(s, ts_mono(xp(-1))), certify=False),
                 ts_neg(CP.compose(t, s, certify=False)))
    from transserial.calculus import raw_derive

    rhs = ts_mul(CP.compose(raw_derive(t), s, certify=False), ts_mono(xp(-1)))
    ha, hb = leading_term(lhs), leading_term(rhs)
    assert ha[0] is hb[0] and ceq(ha[1], hb[1])


def test_taylor_witnessed_clauses():
    t = ts_mono(xp(-1))
    rep = CP.taylor1(t, ts_x(), ts_mono(xp(-2)), ts_mono(xp(-3)), witnessed=True)
    assert rep.holds
    assert rep.witness is not None
    assert rep.side_conditions.get("witnesses_difference")
    assert rep.side_conditions.get("generates_difference")
    assert rep.side_conditions.get("quotient_small")
