"""Exception types raised across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class CoverageError(ValueError):
    """A disorder field does not cover the requested window."""


class DivergentSeriesError(ValueError):
    """The coupling tail sum diverges (alpha >= 1)."""


class EnumerationSizeError(ValueError):
    """A brute-force enumeration was requested on too large an instance."""


class InsufficientSamplesError(ValueError):
    """Not enough samples to form the required number of batches."""


class InvalidFamilyError(ValueError):
    """A triangle family is not a disjoint-or-nested family."""


class RegimeError(ValueError):
    """A bound plan fails its own consistency constraint.

    The ``diagnostics`` mapping carries the offending quantities so callers
    can report which constraint failed and by how much.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
