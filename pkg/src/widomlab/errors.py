"""Shared exception types."""


class WidomlabError(Exception):
    """Base class for errors raised by this package."""


class ToleranceError(WidomlabError):
    """A requested tolerance could not be reached within the work budget.

    Carries the best bracket achieved so callers can decide whether to
    accept it anyway.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class DivergentIntegralError(WidomlabError):
    """An integral was detected (or classified) as divergent."""


class UnboundedPreimageError(WidomlabError):
    """A sublevel/preimage set is not bounded and cannot be represented."""


class ProductHypothesisError(WidomlabError):
    """An infinite-product weight violates its convergence hypotheses."""
