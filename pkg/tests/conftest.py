import random
from fractions import Fraction as F

import pytest

from transserial import config
from transserial import series as srs
from transserial.errors import BudgetExhausted
from transserial.monomial import X, exp_tower, make_mono, mono_mul, mono_x
from transserial.rationals import ceq
from transserial.series import from_sorted_terms, ts_from_terms


def mono_exp_of(terms):
    """Monomial e^{sum terms} from a list of (monomial, coeff)."""
    return make_mono(0, F(0), ts_from_terms(terms))


def e_pow(q):
    """e^{q x}."""
    return mono_exp_of([(X, F(q))])


def prefix_terms(ts, n):
    """First n terms, tolerating an Unknown-zero tail."""
    try:
        with config.cancel_budget(32):
            return ts.terms(n)
    except BudgetExhausted:
        return ts.stream.known()[:n]


def assert_prefix_equal(a, b, n, msg=""):
    ta = prefix_terms(a, n)
    tb = prefix_terms(b, n)
    assert len(ta) == len(tb), f"{msg}: lengths {len(ta)} != {len(tb)}\n{ta}\n{tb}"
    for (ma, ca), (mb, cb) in zip(ta, tb):
        assert ma is mb, f"{msg}: monomials differ: {ma} vs {mb}"
        assert ceq(ca, cb), f"{msg}: coefficients differ at {ma}: {ca} vs {cb}"


def assert_empty(ts, msg=""):
    assert srs.empty_prefix(ts), f"{msg}: found {ts.stream.known()[:3]}"


class RandomSeries:
    """Deterministic random transseries over a small height-≤2 alphabet."""

    def __init__(self, seed=0):
        self.rng = random.Random(seed)

    def coeff(self):
        num = self.rng.choice([-3, -2, -1, 1, 2, 3, 5])
        den = self.rng.choice([1, 1, 2, 3])
        return F(num, den)

    def exponent(self):
        num = self.rng.randint(-4, 4)
        den = self.rng.choice([1, 1, 2])
        return F(num, den)

    def monomial(self, height=2, small=False):
        h = self.rng.randint(0, height)
        xq = self.exponent()
        if h == 0:
            m = mono_x(xq if xq != 0 else F(1))
        elif h == 1:
            arg = [(X, F(self.rng.choice([-2, -1, 1, 2])))]
            if self.rng.random() < 0.4:
                arg.append((mono_x(2), F(self.rng.choice([-1, 1]))))
            m = mono_mul(mono_x(xq), mono_exp_of(arg))
        else:
            inner = mono_exp_of([(X, F(1))])
            arg = [(inner, F(self.rng.choice([-2, -1])))]
            m = mono_mul(mono_x(xq), mono_exp_of(arg))
        if small:
            from transserial.monomial import mono_inv, mono_sign

            s = mono_sign(m)
            if s > 0:
                m = mono_inv(m)
            elif s == 0:
                m = mono_x(F(-1))
        return m

    def series(self, nterms=3, height=2, small=False):
        monos = []
        seen = set()
        for _ in range(nterms * 3):
            m = self.monomial(height, small)
            if m not in seen:
                seen.add(m)
                monos.append(m)
            if len(monos) == nterms:
                break
        return ts_from_terms([(m, self.coeff()) for m in monos])
