"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class GraphingError(Exception):
    """Base class for all errors raised by graphing_lab."""


class DomainError(GraphingError, ValueError):
    """An argument lies outside the domain of an operation."""


class ValidationError(GraphingError, ValueError):
    """A structure (interval set, generator, spec file) is malformed."""


class ResourceError(GraphingError, RuntimeError):
    """A configured resource cap (ball size, search budget) was exceeded."""
