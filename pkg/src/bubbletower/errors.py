"""Exception types shared across the package."""


class BubbleTowerError(Exception):
    """Base class for all library errors."""


class InvalidArgument(BubbleTowerError, ValueError):
    """An argument violates a documented precondition."""


class AccuracyFailure(BubbleTowerError):
    """A numerical routine could not reach its tolerance.

    ``estimate`` carries the best achieved error estimate.
    """

    def __init__(self, message, estimate=float("nan"), value=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.value = value


class ConsistencyFailure(BubbleTowerError):
    """Two independent evaluations of the same constant disagree."""


class NoConvergence(BubbleTowerError):
    """An iterative solver stopped without meeting its criterion.

    ``trace`` holds the per-iteration history (iterate, gradient norm).
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
