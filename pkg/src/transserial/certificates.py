"""Provenance of claimed relations.

A Proven certificate records the by-construction rule chain; Checked(k)
says the claim was validated on a k-term prefix only.  Failed carries a
concrete counterexample monomial, Unknown a budget note.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Proven:
    trace: tuple = ()

    def text(self) -> str:
        return f"proven({';'.join(self.trace)})" if self.trace else "proven()"

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class Checked:
    terms: int
    trace: tuple = ()

    def text(self) -> str:
        return f"checked({self.terms})"

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class Failed:
    reason: str
    evidence: object = None

    def text(self) -> str:
        return f"failed({self.reason})"

    @property
    def ok(self) -> bool:
        return False


@dataclass(frozen=True)
class Unknown:
    reason: str = "budget"

    def text(self) -> str:
        return f"unknown({self.reason})"

    @property
    def ok(self) -> bool:
        return False


def combine(a, b, rule: str):
    """Join two positive certificates under a named rule; the weaker
    grade wins."""
    if not (a.ok and b.ok):
        return a if not a.ok else b
    trace = (rule,) + tuple(getattr(a, "trace", ())) + tuple(getattr(b, "trace", ()))
    if isinstance(a, Proven) and isinstance(b, Proven):
        return Proven(trace)
    k = min(
        a.terms if isinstance(a, Checked) else 1 << 30,
        b.terms if isinstance(b, Checked) else 1 << 30,
    )
    return Checked(k, trace)


def proven(*rules: str) -> Proven:
    return Proven(tuple(rules))
