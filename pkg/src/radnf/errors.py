"""Exception hierarchy.

Every error raised by the library derives from :class:`RadnfError`.  The three
intermediate classes fix the command-line exit code: precondition failures
exit with 2, numerical non-convergence with 3 and broken internal invariants
with 4.
"""

from __future__ import annotations


class RadnfError(Exception):
    """Base class for all library errors."""

    exit_code = 4


class PreconditionError(RadnfError, ValueError):
    exit_code = 2


class NumericalError(RadnfError, ArithmeticError):
    exit_code = 3


class InternalError(RadnfError, AssertionError):
    exit_code = 4


# jet algebra
class CapViolation(PreconditionError):
    pass


class DimensionMismatch(PreconditionError):
    pass


class CapsMismatch(PreconditionError):
    pass


class NotElliptic(PreconditionError):
    pass


# symbol calculus / normalizers
class NotRadial(PreconditionError):
    def __init__(self, failures):
        self.failures = tuple(failures)
        super().__init__("symbol is not in the radial class: " + "; ".join(self.failures))


class BadFiltration(PreconditionError):
    pass


class NonConvergent(PreconditionError):
    """Generator of filtration < 2: the exponential series does not terminate."""


class CapsTooSmall(PreconditionError):
    pass


class OracleMismatch(InternalError):
    pass


class InductiveHypothesisViolated(InternalError):
    pass


# flow numerics
class NonHyperbolic(PreconditionError):
    pass


class InvalidFlowSpec(PreconditionError):
    pass


class NotAttracting(PreconditionError):
    pass


class StepFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class DivergentIntegral(NumericalError):
    pass


# input files
class ParseError(PreconditionError):
    def __init__(self, message: str, line: int, column: int, source: str | None = None):
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{column}: {message}")
