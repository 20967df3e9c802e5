"""Exception hierarchy shared by every dfskit module."""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from dfskit.model import Finding


class DFSError(Exception):
    """Base class for all dfskit errors."""


class MetafileSyntaxError(DFSError):
    """The document is not well-formed JSON (or not UTF-8)."""


class SchemaError(DFSError):
    """The document is well-formed but does not describe a valid metafile.

    ``path`` points at the offending key, e.g. ``meta.links[0].fields[0]``.
    """

    def __init__(self, path: str, message: str, findings: Sequence[Finding] = ()):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
        self.findings = tuple(findings)


class ValidationError(DFSError):
    def __init__(self, message: str, findings: Sequence[Finding] = ()):
        super().__init__(message)
        self.findings = tuple(findings)


class EmptyDatasetError(DFSError):
    pass


class UnknownFileError(DFSError):
    pass


class ClockError(DFSError):
    pass


class AggregationError(DFSError):
    pass


class IncompatibleDatasetsError(AggregationError):
    """Graph similarity fell at or below the rejection threshold."""

    def __init__(self, score: float, epsilon: float):
        super().__init__(
            f"datasets are not comparable: similarity {score:.4f} <= epsilon {epsilon:g}"
        )
        self.score = score
        self.epsilon = epsilon


class NoMatchError(AggregationError):
    """The gate passed but no field pair reached the overlap threshold."""

    def __init__(self, score: float, sigma: float):
        super().__init__(
            f"no field pair reached overlap sigma {sigma:g} (similarity {score:.4f})"
        )
        self.score = score
        self.sigma = sigma


class CollisionError(AggregationError):
    pass


class ImmutabilityError(DFSError):
    pass


class NotFoundError(DFSError):
    pass


class IntegrityError(DFSError):
    pass
