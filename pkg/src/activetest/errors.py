"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ActiveTestError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ActiveTestError, ValueError):
    """A numeric argument lies outside its admissible domain."""


class DegenerateUtilitiesError(DomainError):
    """All utilities are zero, so no budget allocation is possible."""


class DataError(ActiveTestError, ValueError):
    """An input table or file is malformed or inconsistent."""


class InternalLogicError(ActiveTestError, RuntimeError):
    """A branch that should be statically unreachable was taken."""
