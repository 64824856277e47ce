"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to.
"""


class SeqselError(Exception):
    exit_code = 1


class DomainError(SeqselError, ValueError):
    """An argument lies outside the domain an operation is defined on."""

    exit_code = 2


class ConfigError(SeqselError, ValueError):
    exit_code = 2


class DataError(SeqselError, ValueError):
    exit_code = 3


class SizeError(DomainError):
    """A brute-force computation was asked to enumerate too many paths."""


class NumericalDegeneracyError(SeqselError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, t=None, draw=None):
        super().__init__(message)
        self.t = t
        self.draw = draw
