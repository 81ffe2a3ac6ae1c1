"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class OrthantPopError(Exception):
    """Base class for all errors raised by this package."""


class SizeError(OrthantPopError):
    """A requested monomial enumeration would exceed the platform integer range."""


class EvenSymmetryError(OrthantPopError):
    """A polynomial expected to be even in each variable has an odd exponent."""

    def __init__(self, exponent: tuple[int, ...]):
        self.exponent = tuple(exponent)
        super().__init__(f"exponent {self.exponent} has an odd entry; polynomial is not even in each variable")


class CoverageError(OrthantPopError):
    """A moment vector does not contain an index required by a linear functional."""

    def __init__(self, exponent: tuple[int, ...]):
        self.exponent = tuple(exponent)
        super().__init__(f"moment vector does not cover exponent {self.exponent}")


class ConfigurationError(OrthantPopError):
    """A relaxation was requested on an instance lacking a required ingredient."""


class OrderError(OrthantPopError):
    """The relaxation order is too small for the instance degrees."""


class AssumptionError(OrthantPopError):
    """The correlative-sparsity structure does not satisfy the sparse hypotheses."""


class CertificateShapeError(OrthantPopError):
    """A certificate lacks the Gram family needed by an operation."""


class ArgumentError(OrthantPopError, ValueError):
    """An argument is outside its admissible range."""


class ParseError(OrthantPopError):
    """Malformed input text; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
