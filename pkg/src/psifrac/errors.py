"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): validation
errors, raised before any numerics run, and numerical failures, raised when a
scheme cannot certify its result.
"""


class PsiFracError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(PsiFracError, ValueError):
    """Inputs violate a documented precondition."""


class InvalidParameter(ValidationError):
    pass


class UnknownKind(ValidationError):
    pass


class DomainMismatch(ValidationError):
    pass


class InvalidProblem(ValidationError):
    pass


class TransformIneligible(ValidationError):
    """The substitution function does not vanish at the origin."""


class AbscissaViolation(ValidationError):
    """Transform evaluated on or left of its abscissa of convergence."""


class WindowTooSmall(ValidationError):
    pass


class NumericalError(PsiFracError, ArithmeticError):
    """A numerical scheme could not deliver the requested accuracy."""


class AccuracyLoss(NumericalError):
    pass


class ToleranceNotMet(NumericalError):
    pass


class NeedsSmoothness(ToleranceNotMet):
    pass


class ContourFailure(NumericalError):
    pass


class SeriesDivergence(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class UnboundedGrowth(NumericalError):
    pass
