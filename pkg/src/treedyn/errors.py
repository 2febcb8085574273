"""Exception types and validation codes shared across the package."""

from __future__ import annotations

from dataclasses import dataclass

# Validation codes for marked tree maps.
NOT_A_TREE = "NOT_A_TREE"
COLLAPSED_SEGMENT = "COLLAPSED_SEGMENT"
NON_ADJACENT_IMAGES = "NON_ADJACENT_IMAGES"
NONPOSITIVE_WEIGHT = "NONPOSITIVE_WEIGHT"
VERTEX_ESCAPES_X0 = "VERTEX_ESCAPES_X0"
BAD_SUBDIVISION = "BAD_SUBDIVISION"
MISSING_IMAGE = "MISSING_IMAGE"
MISSING_WEIGHT = "MISSING_WEIGHT"
UNKNOWN_EDGE = "UNKNOWN_EDGE"
UNKNOWN_MARK = "UNKNOWN_MARK"


@dataclass(frozen=True)
class Violation:
    """One violated invariant, with a machine-readable code."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


class TreeDynError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TreeDynError):
    """Raised by constructors; carries the full list of violated invariants."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid input")

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)


class ResourceLimitError(TreeDynError):
    """A configured cap (point count, cycle count) was exceeded."""


class UntaggedCycleError(TreeDynError):
    """A periodic vertex carries no FATOU/JULIA tag."""


class NonconvergenceError(TreeDynError):
    """Certified spectral bounds failed to tighten within the iteration cap."""


class ParseError(TreeDynError):
    """Malformed document text or field."""


class GraftError(TreeDynError):
    """Invalid grafting data (bad orbit, inadmissible branch)."""
