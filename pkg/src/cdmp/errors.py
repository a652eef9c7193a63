"""Exception hierarchy shared across the package.

Every error carries a stable machine-readable ``code`` so that callers
(CLI exit paths, HTTP handlers) can map failures without string matching.
"""

from __future__ import annotations


class CdmpError(Exception):
    """Base class for all errors raised by this package."""

    code: str = "error"


class InvalidGeometryError(CdmpError):
    """A geometric primitive violates its construction preconditions."""

    code = "invalid_geometry"


class InvalidDemonstrationError(CdmpError):
    """A demonstration is too short, non-monotone in time, or non-finite."""

    code = "invalid_demonstration"


class DegenerateProblemError(CdmpError):
    """The problem is unsolvable as posed (e.g. an endpoint lies inside an
    inflated constraint region, so no forcing perturbation can fix it)."""

    code = "degenerate_problem"


class InfeasibleError(CdmpError):
    """The solver could not produce a feasible trajectory."""

    code = "infeasible"


class NonFiniteStateError(CdmpError):
    """Numerical integration produced NaN or infinity."""

    code = "non_finite_state"


class DuplicateIdError(CdmpError):
    """An id collides with one already present in the workspace."""

    code = "duplicate_id"


class DanglingReferenceError(CdmpError):
    """Something refers to an id that does not exist in the workspace."""

    code = "dangling_reference"


class UnknownSchemaVersionError(CdmpError):
    """A workspace file declares a schema version newer than this build."""

    code = "unknown_schema_version"


class MalformedFileError(CdmpError):
    """A workspace file or document is structurally invalid."""

    code = "malformed_file"


class NotFoundError(CdmpError):
    """A requested entity does not exist."""

    code = "not_found"


class ConflictError(CdmpError):
    """A mutation was based on a stale revision of the workspace."""

    code = "conflict"


class TimeBudgetError(CdmpError):
    """A solve ran out of wall-clock budget before producing any result."""

    code = "time_budget"
