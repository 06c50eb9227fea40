from __future__ import annotations


class TermError(ValueError):
    """Base class for every error raised by the package."""


class ParseError(TermError):
    def __init__(self, message: str, line: int = 1, column: int = 1) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.detail = message


class ArityError(TermError):
    pass


class UnknownSymbol(TermError):
    pass


class UnguardedRecursion(TermError):
    """A recursion binder whose variable is reachable without passing a constructor."""


class NonRationalTerm(TermError):
    """The term would have an irregular nameless unfolding.

    This happens when a recursion body mentions a variable bound outside the
    recursion and the recursion re-enters itself underneath an abstraction:
    every unfolding then needs a different binder distance for that variable.
    """


class InvalidPosition(TermError):
    pass


class SubstitutionError(TermError):
    pass


class UnassignedMetaVariable(TermError):
    pass


class FiniteChainsViolation(TermError):
    pass


class InvalidRule(TermError):
    pass


class StaleRedex(TermError):
    """The redex no longer matches its rule at its position."""
