"""Exception hierarchy shared by every cogarch module."""


class CogarchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CogarchError, ValueError):
    """Parameters or configuration violate a structural constraint."""


class DegenerateSpectrum(CogarchError):
    """A characteristic polynomial has (numerically) repeated roots."""


class IllConditioned(CogarchError):
    """A matrix is too ill-conditioned to be used safely.

    The condition estimate is kept on ``cond`` so callers can report it.
    """

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class SingularMatrix(CogarchError):
    """A linear system is singular to working tolerance."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class NumericOverflow(CogarchError, OverflowError):
    pass


class NotApplicable(CogarchError):
    """The hypotheses of a check are not met, so it cannot be evaluated."""


class NonConvergence(CogarchError):
    pass


class InvariantBreach(CogarchError):
    """An invariant guaranteed by theory failed during a computation."""


class ConditionFailed(CogarchError):
    """A sufficient condition required by an operation does not hold.

    ``label`` names the condition that failed.
    """

    def __init__(self, message, label=None):
        super().__init__(message)
        self.label = label
