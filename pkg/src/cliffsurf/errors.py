"""Exception types raised across the package."""


class CliffsurfError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CliffsurfError, ValueError):
    pass


class NotInvertible(CliffsurfError, ArithmeticError):
    pass


class DegenerateMetric(CliffsurfError, ArithmeticError):
    """Raised when the area density W vanishes somewhere it must not."""


class GridTooSmall(CliffsurfError, ValueError):
    pass


class NotSphereValued(CliffsurfError, ValueError):
    pass


class NotClosed(CliffsurfError, ArithmeticError):
    """A 1-form failed the closedness check and cannot be integrated."""


class NotMinimal(CliffsurfError, ValueError):
    pass


class NotHolomorphic(CliffsurfError, ValueError):
    pass


class WedgeNotZero(CliffsurfError, ValueError):
    pass


class IllConditionedChi(CliffsurfError, ArithmeticError):
    pass


class CommutatorNonzero(CliffsurfError, ValueError):
    pass


class NotGrade2(CliffsurfError, ValueError):
    pass


class RCapExceeded(CliffsurfError, ValueError):
    pass


class DegenerateStep(CliffsurfError, ArithmeticError):
    pass


class SigmaZero(CliffsurfError, ZeroDivisionError):
    pass
