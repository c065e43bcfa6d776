"""Exception types shared across the solvers and optimizers."""


class PopmaxError(Exception):
    """Base class for all package errors."""


class NonPositiveResource(PopmaxError):
    """Resource distribution has negative values or a nonpositive mean."""


class NoConvergence(PopmaxError):
    """An iterative solve exhausted its budget.

    Carries the last residual so callers can decide whether the partial
    answer is still usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ExtinctionDetected(PopmaxError):
    """The density iterate collapsed toward zero and the habitat cannot
    sustain a positive steady state (principal eigenvalue <= 0)."""

    def __init__(self, message, lambda1=None):
        super().__init__(message)
        self.lambda1 = lambda1


class SingularAdjoint(PopmaxError):
    """The linearized operator is numerically singular."""

    def __init__(self, message, pivot_estimate=None):
        super().__init__(message)
        self.pivot_estimate = pivot_estimate


class GaugeViolation(PopmaxError):
    """A zero-flux Poisson right-hand side fails the zero-mean
    compatibility condition."""


class NonZeroMean(PopmaxError):
    """A field that must have zero mean does not."""


class InfeasibleBudget(PopmaxError):
    """The requested mean resource level cannot be met under the
    pointwise bounds."""


class GridMismatch(PopmaxError):
    """Two fields that must share a grid do not."""


class SweepTooCoarse(PopmaxError):
    """A parameter sweep failed to bracket the feature it was asked to
    locate."""


class DegenerateGapWarning(UserWarning):
    """The first spectral gap is numerically indistinguishable from zero."""
