"""Exception types shared across the package.

Validation-style failures subclass ValueError so callers can catch either the
specific type or the builtin; runtime numerical failures subclass RuntimeError.
"""

from __future__ import annotations


class MarginalEvoError(Exception):
    """Base class for every error raised by this package."""


class ParseError(MarginalEvoError, ValueError):
    """Config file is syntactically malformed."""


class ValidationError(MarginalEvoError, ValueError):
    """A config invariant is violated; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidParameter(MarginalEvoError, ValueError):
    """An operation received an out-of-domain argument."""


class InvalidInput(MarginalEvoError, ValueError):
    """Selection input is unusable (empty or non-finite fitness)."""


class DimensionMismatch(MarginalEvoError, ValueError):
    """Matrix and dynamics dimensions disagree."""


class DivergenceError(MarginalEvoError, RuntimeError):
    """A trajectory component exceeded the overflow guard."""

    def __init__(self, step: int, value: float):
        super().__init__(f"trajectory diverged at step {step} (|h| = {value:.3e})")
        self.step = step
        self.value = value


class EigenFailure(MarginalEvoError, RuntimeError):
    """The eigenvalue decomposition did not converge."""


class MissingData(MarginalEvoError, ValueError):
    """A required field of TrajectoryStats is absent or empty."""


class NonConvergence(MarginalEvoError, RuntimeError):
    """An iterative solver failed to bracket or converge."""


class PoleError(MarginalEvoError, ValueError):
    """Spectral kernel evaluated too close to its pole."""


class InsufficientData(MarginalEvoError, ValueError):
    """Too few recorded samples for the requested spectral estimate."""


class EmptyBand(MarginalEvoError, ValueError):
    """The frequency band contains too few usable grid points."""


class ZeroTheory(MarginalEvoError, ValueError):
    """The theoretical curve vanishes inside the band."""
