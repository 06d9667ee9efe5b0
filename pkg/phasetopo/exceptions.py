"""
Exceptions raised by phasetopo.

All errors derive from :class:`PhaseTopoError`, itself a :class:`ValueError`, so
callers can either catch the whole family or a specific failure.
"""

from typing import Any, Tuple


class PhaseTopoError(ValueError):
    """Base class of all phasetopo errors."""


class NetworkError(PhaseTopoError):
    """The network structure does not allow the requested operation."""


class LineModelError(PhaseTopoError):
    """A line impedance matrix violates the line model invariants."""


class SingularMatrixError(PhaseTopoError):
    """A matrix is numerically singular (reciprocal condition below threshold)."""


class InvalidOrderingError(PhaseTopoError):
    """A phase ordering is not an injective map between the two phase sets."""


class MissingScoreError(PhaseTopoError):
    """A pair score required by the greedy recovery is not available."""


class ConfigurationError(PhaseTopoError):
    """A configuration value or key is not valid."""


class EvaluationError(PhaseTopoError):
    """An estimate cannot be compared with the ground truth."""


class DegenerateChannelError(PhaseTopoError):
    """A measurement channel has zero empirical variance."""

    def __init__(self, channel: Tuple[int, Any], message: str) -> None:
        super().__init__(message)
        self.channel = channel


class TrialError(PhaseTopoError):
    """A trial of an experiment failed, wraps the inner error."""

    def __init__(self, trial: int, message: str) -> None:
        super().__init__(message)
        self.trial = trial
