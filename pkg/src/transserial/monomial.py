"""The ordered group of transmonomials.

A monomial is stored as a log-free core x^b * e^L composed with
log_M (M = depth).  L is itself a purely large, log-free transseries of
smaller height, so the representation is recursive.  Construction
eagerly canonicalizes the depth to its minimum under the identification
of g∘log_m with (g∘exp)∘log_{m+1}, and all monomials are interned in a
session registry so that structural equality is object identity.

Lazily defined exponent series are keyed by identity unless a bounded
probe shows them to be finite, in which case the canonical finite key
is used.
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction

from . import config
from .errors import BudgetExhausted, KernelBug
from .rationals import (
    QONE,
    QZERO,
    Const,
    ckey,
    cis_zero,
    cneg,
    cnum,
    csign,
    ctext,
    qstr,
)

LT, EQ, GT = -1, 0, 1

_lock = threading.Lock()
_intern: dict = {}
_mul_cache: dict = {}
_cmp_cache: dict = {}
_lazy_serial = itertools.count()
_lazy_keys: dict = {}
_SER = None


class Monomial:
    __slots__ = ("depth", "xexp", "arg", "height", "_key", "_hash", "_sign", "_inv")

    def __init__(self, depth: int, xexp: Fraction, arg, height: int, key):
        self.depth = depth
        self.xexp = xexp
        self.arg = arg
        self.height = height
        self._key = key
        self._hash = hash(key)
        self._sign = None
        self._inv = None

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, Monomial) and self._key == other._key)

    def __repr__(self):
        return f"<mono {mono_text(self)}>"

    def __str__(self):
        return mono_text(self)

    @property
    def is_log_free(self) -> bool:
        return self.depth == 0


def _series():
    global _SER
    if _SER is None:
        from . import series as _s

        _SER = _s
    return _SER


def _arg_key(arg):
    if arg is None:
        return None
    terms = _series().probe_finite(arg, config.FINITE_PROBE)
    if terms is not None:
        return tuple((t[0]._key, ckey(t[1])) for t in terms)
    ident = id(arg)
    key = _lazy_keys.get(ident)
    if key is None:
        key = ("lazy", next(_lazy_serial))
        _lazy_keys[ident] = key
        # keep the stream alive so the id stays valid
        _lazy_keys[key] = arg
    return key


def _arg_height(arg) -> int:
    if arg is None:
        return 0
    terms = _series().probe_finite(arg, config.FINITE_PROBE)
    if terms is None:
        terms = _series().force_prefix(arg, 4)
    h = 0
    for m, _ in terms:
        h = max(h, m.height)
    return 1 + h


def make_mono(depth: int, xexp: Fraction, arg) -> Monomial:
    """Intern the canonical representative of (x^xexp * e^arg) ∘ log_depth."""
    if depth < 0:
        raise KernelBug("negative depth")
    if arg is not None:
        srs = _series()
        probed = srs.probe_finite(arg, config.FINITE_PROBE)
        if probed is not None and not probed:
            arg = None
    while depth > 0:
        lowered = _lower_core(xexp, arg)
        if lowered is None:
            break
        xexp, arg = lowered
        depth -= 1
    if arg is None and xexp == 0:
        depth = 0
    key = (depth, xexp, _arg_key(arg))
    mono = _intern.get(key)
    if mono is None:
        with _lock:
            mono = _intern.get(key)
            if mono is None:
                mono = Monomial(depth, xexp, arg, _arg_height(arg), key)
                _intern[key] = mono
    return mono


def _lower_core(xexp: Fraction, arg):
    """Core of (x^xexp e^arg) ∘ log when it is again log-free, else None."""
    if arg is None:
        return (QZERO, None) if xexp == 0 else None
    if xexp != 0:
        return None
    srs = _series()
    terms = srs.probe_finite(arg, config.FINITE_PROBE)
    if terms is None:
        return None
    newx = QZERO
    newterms = []
    for m, c in terms:
        if m is X:
            if not isinstance(c, Fraction):
                return None
            newx = c
            continue
        if m.xexp != 0 or m.depth != 0:
            return None
        shifted = make_mono(1, m.xexp, m.arg)
        if shifted.depth != 0:
            return None
        newterms.append((shifted, c))
    newarg = srs.from_sorted_terms(newterms) if newterms else None
    return (newx, newarg)


def _lift_core(xexp: Fraction, arg):
    """Core of (x^xexp e^arg) ∘ exp; always exists and is log-free."""
    srs = _series()
    lifted = srs.map_monomials(arg, _lift_mono) if arg is not None else None
    if xexp != 0:
        xterm = srs.from_sorted_terms([(X, xexp)])
        lifted = xterm if lifted is None else srs.append_smaller(lifted, X, xexp)
    return (QZERO, lifted)


def _lift_mono(m: Monomial) -> Monomial:
    if m.depth > 0:
        return make_mono(m.depth - 1, m.xexp, m.arg)
    x, a = _lift_core(m.xexp, m.arg)
    return make_mono(0, x, a)


def mono_one() -> Monomial:
    return ONE


def mono_x(b) -> Monomial:
    return make_mono(0, Fraction(b), None)


def ell(m: int) -> Monomial:
    """The iterated logarithm ℓ_m (ℓ_0 = x)."""
    if m < 0:
        raise KernelBug("ell of negative index")
    return make_mono(m, QONE, None)


def exp_tower(k: int) -> Monomial:
    """The iterated exponential exp_k (exp_0 = x)."""
    if k < 0:
        raise KernelBug("exp tower of negative index")
    if k == 0:
        return X
    inner = exp_tower(k - 1)
    srs = _series()
    return make_mono(0, QZERO, srs.from_sorted_terms([(inner, QONE)]))


def ell_prime(m: int) -> Monomial:
    """Derivative of ℓ_m, the small monomial (x ℓ_1 ... ℓ_{m-1})^{-1}."""
    out = ONE
    for i in range(m):
        out = mono_mul(out, mono_inv(ell(i)))
    return out


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if a is ONE:
        return b
    if b is ONE:
        return a
    cached = _mul_cache.get((a, b))
    if cached is not None:
        return cached
    depth = max(a.depth, b.depth)
    xa, arga = _lift_to(a, depth)
    xb, argb = _lift_to(b, depth)
    srs = _series()
    if arga is None:
        arg = argb
    elif argb is None:
        arg = arga
    else:
        arg = srs.raw_add(arga, argb)
    out = make_mono(depth, xa + xb, arg)
    _mul_cache[(a, b)] = out
    return out


def _lift_to(m: Monomial, depth: int):
    x, a = m.xexp, m.arg
    for _ in range(depth - m.depth):
        x, a = _lift_core(x, a)
    return x, a


def mono_inv(a: Monomial) -> Monomial:
    if a is ONE:
        return ONE
    if a._inv is not None:
        return a._inv
    arg = _series().scale_series(a.arg, Fraction(-1)) if a.arg is not None else None
    out = make_mono(a.depth, -a.xexp, arg)
    a._inv = out
    out._inv = a
    return out


def mono_pow(a: Monomial, q: Fraction) -> Monomial:
    q = Fraction(q)
    if a is ONE or q == 0:
        return ONE
    if q == 1:
        return a
    arg = _series().scale_series(a.arg, q) if a.arg is not None else None
    return make_mono(a.depth, a.xexp * q, arg)


def mono_sign(m: Monomial) -> int:
    """Sign of m relative to 1 in the asymptotic order (x -> ∞)."""
    if m._sign is not None:
        return m._sign
    if m is ONE:
        s = 0
    elif m.arg is None:
        s = 1 if m.xexp > 0 else -1
    else:
        lead = _series().leading_term(m.arg)
        if lead is None:
            # exponent series turned out empty past the probe
            s = 1 if m.xexp > 0 else (-1 if m.xexp < 0 else 0)
        else:
            s = csign(lead[1])
    m._sign = s
    return s


def mono_cmp(a: Monomial, b: Monomial) -> int:
    """Total order by asymptotic magnitude: LT means a ≺ b."""
    if a is b:
        return EQ
    key = (a, b)
    hit = _cmp_cache.get(key)
    if hit is not None:
        return hit
    r = mono_mul(a, mono_inv(b))
    if r is ONE:
        out = EQ
    else:
        s = mono_sign(r)
        out = EQ if s == 0 else (GT if s > 0 else LT)
    _cmp_cache[key] = out
    _cmp_cache[(b, a)] = -out
    return out


def mono_lt(a, b):
    return mono_cmp(a, b) == LT


def mono_max(monos):
    it = iter(monos)
    best = next(it)
    for m in it:
        if mono_cmp(best, m) == LT:
            best = m
    return best


def is_small(m: Monomial) -> bool:
    return mono_sign(m) < 0


def is_large(m: Monomial) -> bool:
    return mono_sign(m) > 0


def mono_shift(m: Monomial, k: int) -> Monomial:
    """m ∘ exp_k for k > 0, m ∘ log_{-k} for k < 0."""
    if k == 0 or m is ONE:
        return m
    if k > 0:
        if m.depth >= k:
            return make_mono(m.depth - k, m.xexp, m.arg)
        x, a = m.xexp, m.arg
        for _ in range(k - m.depth):
            x, a = _lift_core(x, a)
        return make_mono(0, x, a)
    return make_mono(m.depth - k, m.xexp, m.arg)


def mono_log(m: Monomial):
    """log m as a purely large (or zero) transseries."""
    srs = _series()
    if m is ONE:
        return srs.zero()
    terms = []
    if m.arg is not None:
        shifted = srs.map_monomials(m.arg, lambda g: mono_shift(g, -m.depth))
    else:
        shifted = None
    if m.xexp != 0:
        tail = srs.from_sorted_terms([(ell(m.depth + 1), m.xexp)])
        if shifted is None:
            return tail
        return srs.append_smaller(shifted, ell(m.depth + 1), m.xexp)
    if shifted is None:
        return srs.zero()
    return shifted


def _tower_base(depth: int, dump: bool) -> str:
    if depth == 0:
        return "x"
    if dump:
        return f"log^{depth}(x)"
    base = "x"
    for _ in range(depth):
        base = f"log({base})"
    return base


def mono_text(m: Monomial, dump: bool = False) -> str:
    """Canonical text.  dump=True uses the log^k(x) factor notation of the
    dump format; otherwise output re-parses in the expression grammar."""
    if m is ONE:
        return "1"
    srs = _series()
    # collect power factors ℓ_k^b, largest first, with residual exp factor
    powers = {}
    if m.xexp != 0:
        powers[m.depth] = m.xexp
    residual = []
    lazy_tail = None
    if m.arg is not None:
        shown = srs.map_monomials(m.arg, lambda g: mono_shift(g, -m.depth))
        probed = srs.probe_finite(shown, config.FINITE_PROBE)
        if probed is None:
            lazy_tail = shown
        else:
            for g, c in probed:
                if g.arg is None and isinstance(c, Fraction):
                    # pure ℓ_k term: exp(c·ℓ_k) = ℓ_{k-1}^c needs g = ℓ_k
                    if g.xexp == 1 and g.depth >= 1:
                        powers[g.depth - 1] = powers.get(g.depth - 1, QZERO) + c
                        continue
                residual.append((g, c))
    factors = []
    for depth in sorted(powers):
        b = powers[depth]
        if b == 0:
            continue
        base = _tower_base(depth, dump)
        factors.append(base if b == 1 else f"{base}^({qstr(b)})")
    if residual:
        inner = srs.series_text(srs.from_sorted_terms(residual), dump=dump)
        factors.append(f"exp({inner})")
    if lazy_tail is not None:
        factors.append(f"exp({srs.series_text(lazy_tail, 8, dump=dump)})")
    if not factors:
        return "1"
    return "*".join(factors)


def mono_log_eval(m: Monomial, x, prec: int = 50):
    """Numeric log(m(x)) via mpmath; forced prefixes only, for sampled
    order checks."""
    import mpmath

    with mpmath.workprec(prec * 4):
        xm = mpmath.mpf(x)
        for _ in range(m.depth):
            xm = mpmath.log(xm)
        total = mpmath.mpf(0)
        if m.xexp != 0:
            total += cnum(m.xexp, prec) * mpmath.log(xm)
        if m.arg is not None:
            for g, c in _series().force_prefix(m.arg, 16):
                total += mpmath.mpf(str(cnum(c, prec))) * mpmath.exp(
                    mono_log_eval(g, xm, prec)
                )
        return total


ONE = None
X = None


def _bootstrap():
    global ONE, X
    key1 = (0, QZERO, None)
    ONE = Monomial(0, QZERO, None, 0, key1)
    _intern[key1] = ONE
    keyx = (0, QONE, None)
    X = Monomial(0, QONE, None, 0, keyx)
    _intern[keyx] = X


_bootstrap()
