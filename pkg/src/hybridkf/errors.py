"""Exception types shared across the estimation library."""


class EstimationError(Exception):
    """Base class for all library-specific failures."""


class InvalidInput(EstimationError):
    """Caller supplied arguments violating a documented precondition."""


class NumericalFailure(EstimationError):
    """A matrix decomposition did not converge or produced garbage."""


class NotPositiveSemiDefinite(EstimationError):
    """A matrix required to be (semi-)definite is not."""


class SimulationDiverged(EstimationError):
    """Truth simulation produced a non-finite state."""

    def __init__(self, time: float):
        super().__init__(f"simulation produced non-finite state at t={time}")
        self.time = time


class FilterDivergence(EstimationError):
    """A filter step produced non-finite estimates."""


class StepRejected(EstimationError):
    """Internal signal: the current integrator step must be retried smaller."""


class SingularMidpointSystem(EstimationError):
    """I - (tau/2) F at the step mid-point is singular."""


class AccuracyNotAttainable(EstimationError):
    """Global error target cannot be met even at the tolerance floor."""

    def __init__(self, achieved: float, target: float):
        super().__init__(
            f"scaled global error {achieved:.3e} exceeds target {target:.3e} "
            "at the local tolerance floor"
        )
        self.achieved = achieved
        self.target = target


class StepBudgetExceeded(EstimationError):
    """The integrator exceeded its step-count cap on one interval."""
