"""Exception hierarchy shared by every module.

The CLI maps the three families onto exit codes: validation (2),
numerical failure (3) and enumeration guards (4).
"""


class FblError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FblError, ValueError):
    """Input does not satisfy a documented precondition."""


class DimensionMismatch(ValidationError):
    pass


class AbsoluteContinuityViolation(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class EmptyFeasibleSet(ValidationError):
    pass


class ConditionViolation(ValidationError):
    pass


class NumericalError(FblError, ArithmeticError):
    """An iterative or geometric computation failed to produce a certified answer."""


class NonConvergence(NumericalError):
    pass


class SupportAmbiguity(NumericalError):
    pass


class EmptyPolytope(NumericalError):
    pass


class LPUnbounded(NumericalError):
    pass


class RootBracketFailure(NumericalError):
    pass


class DegenerateVertices(NumericalError):
    pass


class SupportLoss(NumericalError):
    pass


class EnumerationTooLarge(FblError):
    """An exact oracle would need to enumerate more objects than the guard allows."""


class TypeEnumerationTooLarge(EnumerationTooLarge):
    pass
