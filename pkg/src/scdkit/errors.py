"""Exception hierarchy shared by the toolkit.

ValidationError maps to CLI exit code 1, FormatError to exit code 2.
"""

from __future__ import annotations


class ScdkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ScdkitError):
    """Bad inputs, violated preconditions, unsatisfiable configurations."""


class ManifestError(ValidationError):
    """Manifest-level validation failure carrying per-record violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__(
            "manifest validation failed:\n" + "\n".join(f"  - {v}" for v in violations)
        )


class UnsatisfiableError(ValidationError):
    """A builder constraint that no segment arrangement can satisfy."""


class FormatError(ScdkitError):
    """Malformed or truncated files, bad magic, version mismatches."""
