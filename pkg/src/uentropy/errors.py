"""Exception hierarchy.

Two roots matter to callers: :class:`ValidationError` for bad inputs and
:class:`NumericalError` for solver failures. The CLI maps them to exit codes
1 and 2 respectively.
"""


class UEntropyError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(UEntropyError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(UEntropyError, ArithmeticError):
    """A numerical procedure failed on otherwise valid input."""


# measure core
class EmptySpace(ValidationError):
    pass


class NonpositiveWeight(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NegativeValue(ValidationError):
    pass


class NotADensity(ValidationError):
    pass


class AllZero(ValidationError):
    pass


class SpaceMismatch(ValidationError):
    pass


class BadExponent(ValidationError):
    pass


# utilities
class BadGamma(ValidationError):
    pass


class BadScale(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class InadmissibleUtility(ValidationError):
    """Asymptotic elasticity is known to be >= 1."""


class BracketFailure(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class NotEstimable(NumericalError):
    pass


# entropy
class DimensionTooLarge(ValidationError):
    pass


class BadC(ValidationError):
    pass


class Degenerate(ValidationError):
    pass


# markov
class NotPositive(ValidationError):
    pass


class NotIntegralPreserving(ValidationError):
    pass


class NotDoublyStochastic(ValidationError):
    pass


class BadLambda(ValidationError):
    pass


class NotAPartition(ValidationError):
    pass


class NotMeasurePreserving(ValidationError):
    pass


# dynamics
class CriteriaDisagreement(NumericalError):
    """L1 and entropy criteria gave opposite verdicts; indicates a numerical fault."""


# cli
class ConfigParse(ValidationError):
    pass


class IoFailure(ValidationError):
    pass
