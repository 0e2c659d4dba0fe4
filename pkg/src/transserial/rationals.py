"""Exact coefficient arithmetic.

Coefficients live in the field generated over Q by the symbolic atoms
log(p) (p prime) and E**q (q rational).  Plain rationals stay
`fractions.Fraction` on a fast path; anything irrational is promoted to
a canonicalized sympy expression (`expand` + `cancel`, with logarithms
of rationals always decomposed into prime logs so equal values share
one representation).

Exponents of x remain pure rationals throughout the library; only
coefficients ever go symbolic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

import sympy as sp

from .errors import UnsupportedConstant

Q = Fraction
Const = Union[Fraction, sp.Expr]

QZERO = Fraction(0)
QONE = Fraction(1)


def qstr(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _canon(expr: sp.Expr) -> Const:
    expr = sp.cancel(sp.expand(expr))
    if expr.is_Rational:
        return Fraction(expr.p, expr.q)
    return expr


def _lift(c: Const) -> sp.Expr:
    if isinstance(c, Fraction):
        return sp.Rational(c.numerator, c.denominator)
    return c


def cnorm(c) -> Const:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    return _canon(sp.sympify(c))


def cadd(a: Const, b: Const) -> Const:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return _canon(_lift(a) + _lift(b))


def csub(a: Const, b: Const) -> Const:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a - b
    return _canon(_lift(a) - _lift(b))


def cneg(a: Const) -> Const:
    if isinstance(a, Fraction):
        return -a
    return _canon(-a)


def cmul(a: Const, b: Const) -> Const:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return _canon(_lift(a) * _lift(b))


def cdiv(a: Const, b: Const) -> Const:
    if cis_zero(b):
        raise ZeroDivisionError("division by zero constant")
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a / b
    return _canon(_lift(a) / _lift(b))


def cis_zero(c: Const) -> bool:
    if isinstance(c, Fraction):
        return c == 0
    return c == 0 or sp.simplify(c) == 0


def ceq(a: Const, b: Const) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return cis_zero(csub(a, b))


def csign(c: Const) -> int:
    """Sign of a constant, decided exactly for rationals and by sympy's
    numeric machinery for symbolic values."""
    if isinstance(c, Fraction):
        return (c > 0) - (c < 0)
    if cis_zero(c):
        return 0
    pos = c.is_positive
    if pos is True:
        return 1
    if pos is False:
        return -1
    # Fall back to interval evaluation with growing precision.
    for prec in (30, 80, 200):
        val = sp.N(c, prec)
        if val.is_comparable:
            if val > sp.Rational(1, 10) ** (prec // 2):
                return 1
            if val < -sp.Rational(1, 10) ** (prec // 2):
                return -1
    raise UnsupportedConstant(f"cannot decide sign of {c}")


def _prime_log(c: Fraction) -> sp.Expr:
    # log of a positive rational as a Z-combination of prime logs
    if c <= 0:
        raise UnsupportedConstant(f"log of non-positive constant {c}")
    total = sp.Integer(0)
    for p, e in sp.factorint(c.numerator).items():
        total += e * sp.log(p)
    for p, e in sp.factorint(c.denominator).items():
        total -= e * sp.log(p)
    return total


def clog(c: Const) -> Const:
    """Exact log of a positive constant; symbolic atoms for non-units."""
    if isinstance(c, Fraction):
        if c <= 0:
            raise UnsupportedConstant(f"log of non-positive constant {c}")
        if c == 1:
            return QZERO
        return _canon(_prime_log(c))
    if csign(c) <= 0:
        raise UnsupportedConstant(f"log of non-positive constant {c}")
    expr = sp.expand_log(sp.log(c), force=True)
    expr = expr.replace(
        lambda e: e.func is sp.log and e.args[0].is_Rational,
        lambda e: _prime_log(Fraction(e.args[0].p, e.args[0].q)),
    )
    if expr.has(sp.log) and any(
        not a.args[0].is_prime for a in expr.atoms(sp.log)
    ):
        raise UnsupportedConstant(f"log({c}) leaves the closed constant fragment")
    return _canon(expr)


def cexp(c: Const) -> Const:
    """Exact exp of a constant that is rational plus a Q-combination of
    prime logs; raises for anything deeper."""
    if isinstance(c, Fraction):
        if c == 0:
            return QONE
        return _canon(sp.exp(sp.Rational(c.numerator, c.denominator)))
    expr = sp.expand(c)
    result = sp.Integer(1)
    for term in sp.Add.make_args(expr):
        coeff, rest = term.as_coeff_Mul()
        if not coeff.is_Rational:
            raise UnsupportedConstant(f"exp({c}) leaves the closed constant fragment")
        if rest == 1:
            result *= sp.exp(coeff)
        elif rest.func is sp.log and rest.args[0].is_Rational:
            result *= rest.args[0] ** coeff
        else:
            raise UnsupportedConstant(f"exp({c}) leaves the closed constant fragment")
    return _canon(result)


def cpow(c: Const, b: Fraction) -> Const:
    """c**b with b rational; fractional b requires c > 0."""
    if b.denominator == 1:
        k = b.numerator
        if isinstance(c, Fraction):
            if k >= 0:
                return c ** k
            if c == 0:
                raise ZeroDivisionError("0 to a negative power")
            return c ** k
        return _canon(_lift(c) ** k)
    if csign(c) <= 0:
        raise UnsupportedConstant(f"fractional power of non-positive constant {c}")
    return _canon(_lift(c) ** sp.Rational(b.numerator, b.denominator))


def ckey(c: Const):
    """Hashable canonical key; rationals and sympy rationals never mix."""
    return c


def ctext(c: Const) -> str:
    if isinstance(c, Fraction):
        return qstr(c)
    return str(c)


def cnum(c: Const, prec: int = 50):
    """Numeric value (mpmath-compatible) for sampled oracles."""
    if isinstance(c, Fraction):
        import mpmath

        with mpmath.workprec(prec * 4):
            return mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator)
    return sp.N(c, prec)


def as_fraction(c: Const) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if c.is_Rational:
        return Fraction(c.p, c.q)
    raise UnsupportedConstant(f"{c} is not rational")


def is_rational(c: Const) -> bool:
    return isinstance(c, Fraction) or bool(c.is_Rational)
