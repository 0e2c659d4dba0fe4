"""Exception hierarchy shared by all kernel modules.

Exit-code mapping used by the CLI: precondition violations -> 2,
budget exhaustion -> 3, parse errors -> 4.
"""

from __future__ import annotations


class TransserialError(Exception):
    """Base class for all library errors."""


class BudgetExhausted(TransserialError):
    """A lazy computation could not finish within its node/term budget."""

    def __init__(self, what: str, budget: int | None = None):
        self.what = what
        self.budget = budget
        msg = what if budget is None else f"{what} (budget {budget})"
        super().__init__(msg)


class PreconditionViolation(TransserialError):
    """An operation was called outside its stated domain."""


class ZeroInput(PreconditionViolation):
    pass


class NotSmall(PreconditionViolation):
    pass


class NotLargePositive(PreconditionViolation):
    pass


class NegativeLeadingForFractionalPower(PreconditionViolation):
    pass


class NonPositiveLeading(PreconditionViolation):
    pass


class EmptyInput(PreconditionViolation):
    pass


class NotInGrid(PreconditionViolation):
    def __init__(self, monomial):
        self.monomial = monomial
        super().__init__(f"monomial {monomial} is not a member of the grid")


class WitnessMissing(PreconditionViolation):
    pass


class UnsupportedConstant(TransserialError):
    """A symbolic constant left the closed fragment we do exact arithmetic on."""


class CertificateViolation(TransserialError):
    """Forcing a certified object revealed that the certificate is wrong."""

    def __init__(self, index, detail: str = ""):
        self.index = index
        super().__init__(f"certificate violated at index {index}" + (f": {detail}" if detail else ""))


class HypothesisViolation(TransserialError):
    """A named hypothesis of a lemma-shaped operation failed."""

    def __init__(self, which: str, index=None):
        self.which = which
        self.index = index
        msg = which if index is None else f"{which} (at {index})"
        super().__init__(msg)


class NonContraction(TransserialError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"fixed-point increments stopped descending at step {step}")


class ParseError(TransserialError):
    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        where = f"at column {position + 1}"
        msg = f"syntax error {where}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class KernelBug(TransserialError):
    """Internal invariant broke; always a bug, never user error."""
