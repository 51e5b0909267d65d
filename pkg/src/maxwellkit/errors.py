"""Exception hierarchy shared by the engine and the command line."""
from __future__ import annotations


class MaxwellKitError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 3


class ParseError(MaxwellKitError):
    exit_code = 2

    def __init__(self, message: str, text: str = "", pos: int = 0, expected=()):
        self.text = text
        self.pos = pos
        self.expected = tuple(sorted(set(expected)))
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        detail = f"{message} at line {self.line}, column {self.column} (position {pos})"
        if self.expected:
            detail += "; expected one of: " + ", ".join(self.expected)
        super().__init__(detail)
        self.message = message


class UnboundSymbol(MaxwellKitError):
    pass


class DomainViolation(MaxwellKitError):
    """Evaluation left the domain: log of a nonpositive number, division by zero, ..."""


class DomainError(MaxwellKitError):
    """A model or box is unusable (empty box, singular parameter, parallel gradients)."""


class DegenerateBracket(MaxwellKitError):
    pass


class InvalidTriple(MaxwellKitError):
    exit_code = 2


class SingularFrame(MaxwellKitError):
    pass


class EmptyCell(MaxwellKitError):
    pass


class SConditionFailed(MaxwellKitError):
    exit_code = 1


class SingularCalibration(MaxwellKitError):
    pass


class CrossingCurves(MaxwellKitError):
    pass
