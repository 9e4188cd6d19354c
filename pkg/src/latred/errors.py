"""Exception types shared across the toolkit."""


class LatredError(Exception):
    """Base class for all latred errors."""


class NonFiniteInputError(LatredError, ValueError):
    """A matrix or vector argument contains NaN or Inf entries."""


class SingularPivotError(LatredError, ValueError):
    """A triangular solve hit a pivot with magnitude below threshold."""


class RankDeficiencyError(LatredError, ValueError):
    """A basis is numerically rank deficient."""


class ZeroDiagonalError(LatredError, ValueError):
    """A reduction step divided by a vanishing diagonal entry."""


class IterationOverflowError(LatredError, RuntimeError):
    """A reduction exceeded its hard iteration guard."""


class ZeroInputError(LatredError, ValueError):
    """A rotation kernel received an all-zero input vector."""


class NonUnimodularError(LatredError, ValueError):
    """A transform matrix failed the exact unimodularity check."""


class DimensionError(LatredError, ValueError):
    """Problem dimensions outside the supported range."""


class MatrixFormatError(LatredError, ValueError):
    """A matrix file could not be parsed."""


class GoldenVectorMismatch(LatredError, AssertionError):
    """A fixed-point kernel disagreed with a shipped golden vector."""


class TrialError(LatredError, RuntimeError):
    """A Monte-Carlo trial failed; carries the trial index in the message."""
