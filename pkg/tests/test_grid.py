import itertools
import random
from fractions import Fraction as F

import pytest

from transserial.errors import EmptyInput, NotInGrid
from transserial.grid import (
    Grid,
    Member,
    NotMember,
    RatioSet,
    dominates,
    embed_shifted_monoid,
    grid_member,
    grid_product,
    grid_union,
    group_member,
    min_elements,
    monoid_member,
    subgrid_witness,
)
from transserial.monomial import (
    ONE,
    X,
    make_mono,
    mono_cmp,
    mono_inv,
    mono_mul,
    mono_pow,
)
from transserial.certificates import Failed, Proven

from conftest import e_pow, mono_exp_of


def xp(q):
    return make_mono(0, F(q), None)


MU = RatioSet.from_monomials([xp(-1), e_pow(-1)])


def mu_power(k):
    out = ONE
    for m, e in zip(MU, k):
        out = mono_mul(out, mono_pow(m, F(e)))
    return out


def test_monoid_member_independent():
    r = mono_mul(xp(-3), e_pow(-2))
    sol = monoid_member(r, MU, strict=True)
    assert sol == Member((3, 2))


def test_monoid_member_paper_negative():
    # 1 + x e^{-x} is generated by the pair but x e^{-x} is not witnessed
    xex = mono_mul(X, e_pow(-1))
    assert isinstance(monoid_member(xex, MU), NotMember)


def test_monoid_member_dependent_brute_force():
    mu = RatioSet.from_monomials([xp(-2), xp(-3)])
    # oracle: enumerate all words with exponents up to 10
    reachable = set()
    for j in range(11):
        for k in range(11):
            reachable.add(F(-2) * j + F(-3) * k)
    assert isinstance(monoid_member(xp(-1), mu), NotMember)
    assert F(-1) not in reachable
    sol = monoid_member(xp(-5), mu)
    assert isinstance(sol, Member) and sol.exponents == (1, 1)
    for e in range(2, 14):
        got = isinstance(monoid_member(xp(-e), mu), Member)
        assert got == (F(-e) in reachable), e


def test_monoid_member_strict_vs_weak():
    assert monoid_member(ONE, MU) == Member((0, 0))
    assert isinstance(monoid_member(ONE, MU, strict=True), NotMember)
    empty = RatioSet(())
    assert monoid_member(ONE, empty) == Member(())
    assert isinstance(monoid_member(xp(-1), empty), NotMember)


def test_group_member_allows_negative():
    sol = group_member(mono_mul(X, e_pow(-1)), MU)
    assert sol == Member((-1, 1))


def test_grid_member_examples():
    G = Grid(RatioSet.from_monomials([xp(-1)]), (0,))
    assert grid_member(ONE, G) == Member((0,))
    G2 = Grid(RatioSet.from_monomials([xp(-1)]), (-1,))
    assert grid_member(X, G2) == Member((-1,))
    assert isinstance(grid_member(xp(2), G2), NotMember)


def test_grid_union_examples():
    g1 = Grid(RatioSet.from_monomials([xp(-1)]), (0,))
    g2 = Grid(RatioSet.from_monomials([xp(-1)]), (-2,))
    u = grid_union(g1, g2)
    assert u == g2
    assert grid_union(g1, g1) == g1
    ga = Grid(RatioSet.from_monomials([xp(-1)]), (1,))
    gb = Grid(RatioSet.from_monomials([e_pow(-1)]), (1,))
    u2 = grid_union(ga, gb)
    rng = random.Random(5)
    for _ in range(5):
        k = rng.randint(1, 6)
        assert isinstance(grid_member(mono_pow(xp(-1), F(k)), u2), Member)
        assert isinstance(grid_member(mono_pow(e_pow(-1), F(k)), u2), Member)


def test_embed_shifted_monoid_cases():
    a = RatioSet.from_monomials([xp(-1)])
    g = embed_shifted_monoid(ONE, a)
    assert g == Grid(a, (0,))
    g2 = embed_shifted_monoid(xp(-2), RatioSet.from_monomials([e_pow(-1)]))
    assert xp(-2) in g2.ratios
    assert isinstance(grid_member(xp(-2), g2), Member)
    g3 = embed_shifted_monoid(X, a)
    assert g3 == Grid(a, (-1,))


def test_min_elements_matches_exhaustive():
    rng = random.Random(42)
    for _ in range(30):
        F_ = [tuple(rng.randint(0, 8) for _ in range(3)) for _ in range(rng.randint(1, 100))]
        got = set(min_elements(F_))
        # exhaustive scan
        uniq = set(F_)
        expect = {v for v in uniq
                  if not any(w != v and all(a <= b for a, b in zip(w, v)) for w in uniq)}
        assert got == expect


def brute_force_in_shifted_monoid(target_vec, gvec, alpha_vecs, radius=40):
    """Oracle: does target = g + sum of alpha vectors (BFS over sums)?"""
    from collections import deque

    want = tuple(t - g for t, g in zip(target_vec, gvec))
    seen = {tuple(0 for _ in want)}
    queue = deque(seen)
    while queue:
        cur = queue.popleft()
        if cur == want:
            return True
        for v in alpha_vecs:
            nxt = tuple(c + d for c, d in zip(cur, v))
            if nxt in seen:
                continue
            # prune: never overshoot in total weight
            if sum(abs(z) for z in nxt) > radius:
                continue
            if all(n <= w or vv >= 0 for n, w, vv in zip(nxt, want, v)):
                seen.add(nxt)
                queue.append(nxt)
    return False


def test_subgrid_witness_paper_example():
    xex = mono_mul(X, e_pow(-1))
    G = Grid(MU, (-1, 0))
    alpha = subgrid_witness([ONE, xex], G)
    for m in (xp(-1), e_pow(-1), xex):
        assert m in alpha.monos
    # soundness: every element of A divides max A within alpha*
    for a in (ONE, xex):
        assert isinstance(monoid_member(mono_mul(a, mono_inv(ONE)), alpha), Member)


def test_subgrid_witness_singleton():
    alpha = subgrid_witness([xp(-2)], Grid(RatioSet.from_monomials([xp(-1)]), (0,)))
    assert alpha == RatioSet.from_monomials([xp(-1)])


def test_subgrid_witness_errors():
    G = Grid(MU, (0, 0))
    with pytest.raises(EmptyInput):
        subgrid_witness([], G)
    with pytest.raises(NotInGrid):
        subgrid_witness([X], G)


def test_subgrid_witness_random_brute_force():
    rng = random.Random(9)
    for _ in range(40):
        vecs = sorted({(rng.randint(0, 12), rng.randint(0, 12))
                       for _ in range(rng.randint(1, 12))})
        A = [mu_power(v) for v in vecs]
        G = Grid(MU, (0, 0))
        alpha = subgrid_witness(A, G)
        gmax = max(A, key=lambda m: (mono_cmp(m, ONE), ))
        # recompute max properly
        gmax = A[0]
        for m in A[1:]:
            if mono_cmp(gmax, m) == -1:
                gmax = m
        gvec = vecs[[mu_power(v) for v in vecs].index(gmax)]
        alpha_vecs = []
        for m in alpha:
            sol = group_member(m, MU)
            assert isinstance(sol, Member)
            alpha_vecs.append(sol.exponents)
        for v, a in zip(vecs, A):
            assert brute_force_in_shifted_monoid(v, gvec, alpha_vecs), (v, gvec, alpha_vecs)


def test_dominates_paper_and_derived():
    xex = mono_mul(X, e_pow(-1))
    bad = dominates([xp(-1), xex], [ONE], MU)
    assert isinstance(bad, Failed) and bad.evidence is xex
    ok = dominates([xp(-1)], [ONE], RatioSet.from_monomials([xp(-1)]))
    assert isinstance(ok, Proven)
    twelfth = RatioSet.from_monomials([xp(F(-1, 12))])
    ok2 = dominates([xp(F(-1, 2)), xp(F(-2, 3)), xp(F(-3, 4))], [ONE], twelfth)
    assert isinstance(ok2, Proven)
    # brute force: all three exponents are multiples of 1/12
    for q in (F(-1, 2), F(-2, 3), F(-3, 4)):
        assert any(F(-1, 12) * k == q for k in range(13))


def test_ratio_set_order_canonical():
    rs = RatioSet.from_monomials([e_pow(-1), xp(-1), e_pow(-1)])
    assert rs.monos == (xp(-1), e_pow(-1))


def test_witness_inflation_transitivity():
    # alpha* ⊇ beta* lets every beta-proven dominance re-verify under alpha
    beta = RatioSet.from_monomials([xp(-2)])
    alpha = RatioSet.from_monomials([xp(-1)])
    assert isinstance(monoid_member(xp(-2), alpha), Member)
    pairs = [(xp(-4), xp(-2)), (xp(-6), ONE)]
    for a, b in pairs:
        assert isinstance(dominates([a], [b], beta), Proven)
        assert isinstance(dominates([a], [b], alpha), Proven)


def test_grid_product():
    g1 = embed_shifted_monoid(xp(-2), RatioSet.from_monomials([xp(-1)]))
    g2 = embed_shifted_monoid(e_pow(-1), RatioSet(()))
    p = grid_product(g1, g2)
    assert isinstance(grid_member(mono_mul(xp(-2), e_pow(-1)), p), Member)
