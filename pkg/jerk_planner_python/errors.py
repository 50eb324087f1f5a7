"""Exception types raised by the planning pipeline."""


class PlannerError(Exception):
    """Base class for all planning failures."""


class InvalidStateError(PlannerError, ValueError):
    """Non-finite or malformed states, targets, limits or obstacles."""


class OutOfRangeError(PlannerError, ValueError):
    """Evaluation time outside the trajectory horizon."""


class ContinuityError(PlannerError, ValueError):
    """Trajectories joined at mismatching states."""


class InfeasibleTargetError(PlannerError):
    """Target state cannot be reached under the axis limits."""


class InfeasibleDurationError(PlannerError):
    """No trajectory of the requested fixed duration exists."""


class SynchronizationError(PlannerError):

    def __init__(self, axis: int, cause: Exception):
        self.axis = axis
        self.cause = cause
        super().__init__('Axis {} could not be synchronized: {}'.format(axis, cause))


class InvalidEndpointError(PlannerError):
    """Start or target lies inside an inflated obstacle."""


class DegenerateCandidateError(PlannerError):
    """Viastate coincides with start and target on the bound axes."""


class TradeoffError(PlannerError):
    """Tradeoff curves do not intersect inside their bracket."""


class CandidateFailedError(PlannerError):

    def __init__(self, candidate, cause: Exception):
        self.candidate = candidate
        self.cause = cause
        super().__init__('Candidate {} failed: {}'.format(candidate, cause))


class NoCollisionFreeCandidateError(PlannerError):

    def __init__(self, report):
        self.report = report
        super().__init__('No collision-free candidate among {} evaluated'.format(len(report)))


class ScenarioError(PlannerError, ValueError):
    """Scenario document violates the schema or a command was misused."""
