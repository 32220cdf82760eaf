"""Exception types shared across the package."""


class SpecinferError(Exception):
    """Base class for all package-specific errors."""


class FormulaSyntaxError(SpecinferError, ValueError):
    """Raised on malformed formula text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownPropositionError(SpecinferError, ValueError):
    """A formula mentions a proposition outside the declared alphabet."""


class InvalidTraceError(SpecinferError, ValueError):
    """A trace is inconsistent with the automaton it is interpreted in."""


class InvalidChainError(SpecinferError, ValueError):
    """A supposed chain is not totally ordered by subset inclusion."""


class BudgetExceededError(SpecinferError, RuntimeError):
    """An exhaustive backend was asked for more work than its budget allows."""


class NonDyadicError(SpecinferError, ValueError):
    """The exact decision-diagram backend needs dyadic transition probabilities."""


class InconsistentModelError(SpecinferError, RuntimeError):
    """Demonstrations contradict the dynamics model (e.g. a demo satisfies a
    specification that random actions satisfy with probability zero)."""
