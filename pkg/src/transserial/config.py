"""Session-wide budgets.

Budgets keep every lazy computation total: forcing a stream prefix, the
lattice search inside monoid membership, and fixed-point iteration all
give up with an explicit error instead of diverging.
"""

from __future__ import annotations

import os
import sys

# Lazy pipelines nest generators roughly linearly in the prefix length.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 40000))

# Default number of terms forced when an operation needs "the" prefix.
DEFAULT_TERMS = 64

# Candidate terms a merge may examine per emitted term before it reports
# an undetected total cancellation (Unknown-zero).
CANCEL_BUDGET = 96


class cancel_budget:
    """Temporarily tighten or loosen the cancellation drain."""

    def __init__(self, n: int):
        self.n = n
        self.old = None

    def __enter__(self):
        global CANCEL_BUDGET
        self.old = CANCEL_BUDGET
        CANCEL_BUDGET = self.n
        return self

    def __exit__(self, *exc):
        global CANCEL_BUDGET
        CANCEL_BUDGET = self.old
        return False

# Node budget for the nonnegative-integer lattice search in monoid
# membership with multiplicatively dependent generators.
NODE_BUDGET = 10 ** 5

# Iteration cap for fixed-point stabilization.
FIXED_POINT_ITERATIONS = 256

# Terms probed when deciding whether a lazily defined exponent series is
# actually finite (used by monomial canonicalization).
FINITE_PROBE = 128


_BUDGET_OVERRIDE = None


class term_budget:
    """Temporarily pin the default series budget (beats the env var)."""

    def __init__(self, n: int):
        self.n = n
        self.old = None

    def __enter__(self):
        global _BUDGET_OVERRIDE
        self.old = _BUDGET_OVERRIDE
        _BUDGET_OVERRIDE = self.n
        return self

    def __exit__(self, *exc):
        global _BUDGET_OVERRIDE
        _BUDGET_OVERRIDE = self.old
        return False


def default_budget() -> int:
    if _BUDGET_OVERRIDE is not None:
        return _BUDGET_OVERRIDE
    env = os.environ.get("TRANSSERIAL_BUDGET")
    if env:
        try:
            value = int(env)
            if value >= 1:
                return value
        except ValueError:
            pass
    return DEFAULT_TERMS
