"""Exception hierarchy shared across the package.

Every error that can surface through the command line carries an ``exit_code``
so the CLI can translate failures without inspecting types twice.
"""

from __future__ import annotations


class FlexczError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class SchemaError(FlexczError):
    """Malformed input document, bad option value, or an invalid case."""

    exit_code = 2


class InfeasibleModelError(FlexczError):
    """The model (or an LP derived from it) is infeasible or unbounded."""

    exit_code = 3


class NumericalError(FlexczError):
    """A numerical routine failed to converge or hit an internal limit."""

    exit_code = 4


class MismatchError(FlexczError):
    """Cross-checked pipelines disagree beyond tolerance."""

    exit_code = 5


class RowCapError(FlexczError):
    """Fourier-Motzkin elimination exceeded its intermediate row budget."""

    exit_code = 6


class EmptyIntersectionError(InfeasibleModelError):
    """A halfspace strictly separates the interval hull of the set."""


class UnboundedProblemError(InfeasibleModelError):
    """An LP with unbounded objective where a finite value was required."""
