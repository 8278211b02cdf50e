"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to.
"""


class GWNormError(Exception):
    exit_code = 1


class ParseError(GWNormError):
    """Malformed graph or matrix input."""

    exit_code = 2


class PreconditionError(GWNormError, ValueError):
    """Input violates a documented precondition (delta range, SPD, structure)."""

    exit_code = 3


class NonConvergenceError(GWNormError):
    """A truncated series hit its caps before meeting the tolerance.

    ``partial`` holds whatever partial result the caller produced.
    """

    exit_code = 4

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedStructureError(GWNormError):
    """Graph structure outside what the implemented formulas cover."""

    exit_code = 5
