"""Structured errors shared by all simnet modules.

Every error carries a ``details`` dict with machine-readable context
(node ids, offending dimensions, residuals, ...) so the CLI can emit
JSON diagnostics without string parsing.
"""

from __future__ import annotations


class SimnetError(Exception):
    """Base class for all simnet errors."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class SchemaError(SimnetError):
    """Input file violates the simnet JSON schema."""


class DimensionMismatchError(SimnetError):
    """Matrix or signal dimensions are inconsistent."""


class BlockPartitionError(SimnetError):
    """Output/input block ranges do not partition the declared width."""


class WiringError(SimnetError):
    """Interconnection edges and declared blocks disagree."""


class IndefiniteMatrixError(SimnetError):
    """A matrix required to be positive semidefinite is not (beyond tolerance)."""


class ConvergenceError(SimnetError):
    """An iterative kernel did not converge within its iteration budget."""


class CertificateError(SimnetError):
    """A certificate fails one of its verification obligations."""


class StructuralInfeasibleError(CertificateError):
    """The structural matching equations have no solution for the given shape."""


class CompositionError(SimnetError):
    """Network-level gain composition failed (small gain violated or degenerate)."""
