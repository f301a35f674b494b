"""Exceptions raised by the ``spectra`` package.

Every exception derives from :class:`SpectraError` and from the builtin type that best
describes it, so callers may catch either.
"""

from typing import Optional, Sequence


class SpectraError(Exception):
    """Base class of all package errors."""


class InadmissibleWordError(SpectraError, ValueError):
    """A word uses a forbidden transition or an unknown symbol.

    :ivar index: Position of the first offending symbol
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class WordTooShortError(SpectraError, ValueError):
    """Some words do not cover the requested depth.

    :ivar offenders: Indices (into the given collection) of the short words
    """

    def __init__(self, message: str, offenders: Sequence[int]):
        super().__init__(message)
        self.offenders = list(offenders)


class BudgetExceededError(SpectraError, RuntimeError):
    """A computation would exceed its configured enumeration or memory budget."""

    def __init__(self, message: str, budget: int):
        super().__init__(message)
        self.budget = budget


class ConvergenceError(SpectraError, RuntimeError):
    """An iterative method did not reach its tolerance."""


class NotPrimitiveError(SpectraError, ValueError):
    """The transition matrix is not irreducible and aperiodic."""


class EmptyClassError(SpectraError, ValueError):
    """No ergodic measure has an exponent of the requested sign."""


class DomainError(SpectraError, ValueError):
    """Requested exponents lie outside the domain of the transform."""


class SkeletonError(SpectraError, ValueError):
    """A pre-skeleton could not be extracted.

    :ivar minimal_log_k0: Smallest ``log K0`` that makes the window non-empty, if known
    """

    def __init__(self, message: str, minimal_log_k0: Optional[float] = None):
        super().__init__(message)
        self.minimal_log_k0 = minimal_log_k0


class InfeasibleScheduleError(SpectraError, ValueError):
    """No schedule satisfies the inequality system.

    :ivar inequality: Name of the first violated inequality
    :ivar level: Level ``k`` at which it binds
    """

    def __init__(self, message: str, inequality: str, level: int):
        super().__init__(message)
        self.inequality = inequality
        self.level = level


class CertificateError(SpectraError, RuntimeError):
    """The mass audit failed, no entropy certificate can be issued."""


class ConfigError(SpectraError, ValueError):
    """A system configuration file could not be used.

    :ivar line: 1-based line of the problem, when known
    :ivar column: 1-based column of the problem, when known
    """

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column
