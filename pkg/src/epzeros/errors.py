"""Exception hierarchy shared by all modules."""


class EpzerosError(Exception):
    """Base class; the CLI maps these to exit status 3."""


class NonPositiveDefinite(EpzerosError, ValueError):
    pass


class InvalidDiscriminant(EpzerosError, ValueError):
    pass


class DomainError(EpzerosError, ValueError):
    pass


class PoleError(EpzerosError, ZeroDivisionError):
    pass


class BranchTrackingFailure(EpzerosError, ArithmeticError):
    pass


class CutoffExceeded(EpzerosError, ValueError):
    pass


class DegenerateConfig(EpzerosError, ValueError):
    pass


class EstimatorDisagreement(EpzerosError, ArithmeticError):
    pass


class BoundaryZero(EpzerosError, ArithmeticError):
    pass


class NonIntegralWinding(EpzerosError, ArithmeticError):
    pass


class ConvergenceFailure(EpzerosError, ArithmeticError):
    pass


class NegativeDensity(EpzerosError, ArithmeticError):
    pass


class TooManySkips(EpzerosError, ArithmeticError):
    pass


class ConfigError(EpzerosError, ValueError):
    """Invalid experiment configuration (CLI exit status 2)."""
