"""Exception hierarchy for fxtsopt."""


class FxtsoptError(Exception):
    """Base class for all fxtsopt errors."""


class DimensionMismatchError(FxtsoptError):
    """Input vector/matrix has the wrong shape for the problem."""


class ConfigurationError(FxtsoptError):
    """Unknown law selector, bad config key, or invalid option value."""


class GainConditionError(FxtsoptError):
    """A gain hypothesis is violated (e.g. robust law with alpha_min <= eta_bar)."""


class SingularEvaluationError(FxtsoptError):
    """An operation was evaluated at a point where it is undefined."""


class NumericalBlowupError(FxtsoptError):
    """Integration produced non-finite values.

    Carries the last finite time and state for diagnostics.
    """

    def __init__(self, t, x, message="non-finite derivative or state"):
        self.t = t
        self.x = x
        super().__init__(f"{message} at t={t:.6g}")


class OracleFailureError(FxtsoptError):
    """A reference oracle failed to converge or is ill-posed."""


class InvalidNetworkError(FxtsoptError):
    """Estimation network is malformed (e.g. disconnected graph)."""
