"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class CurriculumError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(CurriculumError, ValueError):
    """Base class for rejected arguments."""


class DimensionMismatch(InvalidInput):
    pass


class VarianceOrderViolation(InvalidInput):
    pass


class NormBoundViolation(InvalidInput):
    pass


class NotPSD(InvalidInput):
    pass


class EmptySample(InvalidInput):
    pass


class TooFewSamples(InvalidInput):
    pass


class DeltaOutOfRange(InvalidInput):
    pass


class KappaBelowOne(InvalidInput):
    pass


class TauOutOfRange(InvalidInput):
    pass


class ParamOutOfRange(InvalidInput):
    pass


class SingularCovariance(InvalidInput):
    pass


class OrderingViolation(InvalidInput):
    pass


class DimensionTooSmall(InvalidInput):
    pass


class RegimeViolation(InvalidInput):
    pass


class InfeasibleMixture(InvalidInput):
    pass


class ConfigError(InvalidInput):
    pass


class InsufficientBudget(CurriculumError):
    """The budget cannot give every retained task at least one sample."""


class PreconditionViolated(CurriculumError):
    """A sample-size requirement of the estimated-variance variants fails."""


class BudgetExceeded(CurriculumError, RuntimeError):
    """A draw request would push the total sample count past the budget."""
