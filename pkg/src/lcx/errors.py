"""Exception hierarchy shared by every lcx module."""


class LCXError(Exception):
    """Base class for all library errors."""


class InvalidDensity(LCXError, ValueError):
    """Malformed density or pmf input (shape, finiteness, ordering)."""


class NonConcavePotential(InvalidDensity):
    """The log-density slope sequence increases somewhere."""


class NonIntegrable(InvalidDensity):
    """An unbounded side lacks a decaying tail slope."""


class EmptySupport(InvalidDensity):
    """The support has zero Lebesgue measure."""


class UnboundedDensity(InvalidDensity):
    """The density has no finite supremum."""


class InvalidParameter(LCXError, ValueError):
    pass


class SupportExceedsInterval(LCXError, ValueError):
    pass


class MassMismatch(LCXError, ValueError):
    pass


class SumMismatch(LCXError, ValueError):
    pass


class NotMonotone(LCXError, ValueError):
    pass


class NotSymmetric(LCXError, ValueError):
    pass


class PreconditionUnverified(LCXError):
    """A theorem's hypothesis failed its numerical check."""


class FitBudgetExceeded(LCXError, RuntimeError):
    pass


class BudgetExceeded(LCXError, RuntimeError):
    pass


class DivergentIntegral(LCXError, ArithmeticError):
    pass
