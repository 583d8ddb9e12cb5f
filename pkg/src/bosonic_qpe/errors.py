"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes; library users can catch the
base class or the specific failure they care about.
"""

from __future__ import annotations


class BosonicQpeError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(BosonicQpeError):
    """Experiment configuration is malformed or violates the schema."""


class DimensionError(BosonicQpeError):
    """Invalid or mismatched Fock-space dimensions."""


class InsufficientDimensionError(DimensionError):
    """Requested state does not fit the truncated space.

    Carries the weight that would be lost to truncation.
    """

    def __init__(self, message: str, leaked_weight: float | None = None):
        super().__init__(message)
        self.leaked_weight = leaked_weight


class KrausCutoffError(BosonicQpeError):
    """Loss-channel Kraus rank too small for the populated levels."""


class IntegratorError(BosonicQpeError):
    """Master-equation integration diverged or drifted beyond tolerance."""


class UnreachableTrajectoryError(BosonicQpeError):
    """A forced measurement record has (numerically) zero probability."""


class SelectionFailureError(BosonicQpeError):
    """Post-selection did not succeed within the attempt budget."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class LowConfidenceOutcomeError(BosonicQpeError):
    """A phase estimate fell too far from every allowed grid point."""

    def __init__(self, message: str, outcomes=None):
        super().__init__(message)
        self.outcomes = outcomes


class EnumerationCostError(BosonicQpeError):
    """Exact trajectory enumeration was requested beyond the depth cap."""


class UndefinedReferenceError(BosonicQpeError):
    """Reference state requested for a sector carrying (numerically) no weight."""


class PlanError(BosonicQpeError):
    """Invalid residue-arithmetic plan (e.g. non-coprime moduli)."""
