"""Exception types shared across the package."""


class StatekrigError(Exception):
    """Base class for all package-specific errors."""


class IllConditionedKernelError(StatekrigError):
    """Correlation matrix could not be factorized even at the maximum nugget."""


class UnfittableDataError(StatekrigError):
    """Every optimizer start was rejected; no hyper-parameters could be fitted."""


class RejectedStartError(StatekrigError):
    """The objective is infinite at a start point and at all its probes."""


class DivergenceError(StatekrigError):
    """A surrogate trajectory left the trusted state region."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class EnsembleFailureError(StatekrigError):
    """More than half of the Monte Carlo replicates diverged."""


class StiffnessError(StatekrigError):
    """Reference integrator step size underflowed."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UndefinedDenominatorError(StatekrigError):
    """Relative error is undefined because the truth history is constant."""
