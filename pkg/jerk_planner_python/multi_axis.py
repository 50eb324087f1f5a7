"""Synchronized planning of independent axes."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from . import axis_planner, axis_trajectory
from .axis_planner import Fixed, PartialTarget, TIME_OPTIMAL
from .axis_trajectory import AxisLimits, AxisState, AxisTrajectory
from .errors import InfeasibleDurationError, InfeasibleTargetError, InvalidStateError, PlannerError, SynchronizationError

log = logging.getLogger(__name__)

DURATION_TOL = 1e-9
RETRY_LADDER = (1e-6, 1e-3, 1e-2, 5e-2, 0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class MultiAxisTrajectory:
    """Axis trajectories sharing one total duration."""

    axes: Tuple[AxisTrajectory, ...]

    def __post_init__(self):
        object.__setattr__(self, 'axes', tuple(self.axes))
        if not self.axes:
            raise InvalidStateError('A multi-axis trajectory needs at least one axis')
        durations = [traj.total_duration for traj in self.axes]
        if max(durations) - min(durations) > DURATION_TOL * max(1.0, max(durations)):
            raise InvalidStateError('Axis durations differ: {}'.format(durations))

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def total_duration(self) -> float:
        return max(traj.total_duration for traj in self.axes)

    @property
    def start(self) -> List[AxisState]:
        return [traj.start for traj in self.axes]

    @property
    def end_state(self) -> List[AxisState]:
        return [traj.end_state for traj in self.axes]


def _map(fn, items, parallel: bool, workers: int) -> list:
    if parallel and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _annotated(axis: int, fn):
    try:
        return fn()
    except PlannerError as err:
        err.axis = axis
        raise


def plan_synchronized(starts: Sequence[AxisState], targets: Sequence[PartialTarget], limits: Sequence[AxisLimits],
        duration: Optional[float]=None, parallel: bool=False, workers: int=4) -> MultiAxisTrajectory:
    """Plans every axis time-optimally, then stretches all axes to the slowest one.

    Args:
        starts, targets, limits: one entry per axis
        duration: optional common duration; every axis is then planned Fixed(duration)
        parallel: plan the axes on a thread pool
        workers: thread pool size

    Returns:
        MultiAxisTrajectory; the dominant axis keeps its time-optimal profile
    """
    n = len(starts)
    assert n >= 1 and len(targets) == n and len(limits) == n, 'Per-axis inputs must have equal, non-zero length'
    axes = list(range(n))

    if duration is not None:
        fixed = lambda i: _annotated(i, lambda: axis_planner.plan(starts[i], targets[i], limits[i], Fixed(duration)))
        return MultiAxisTrajectory(tuple(_map(fixed, axes, parallel, workers)))

    optimal = _map(
        lambda i: _annotated(i, lambda: axis_planner.plan(starts[i], targets[i], limits[i], TIME_OPTIMAL)),
        axes, parallel, workers)
    durations = [traj.total_duration for traj in optimal]
    total = max(durations)
    dominant = durations.index(total)
    if total <= 0:
        return MultiAxisTrajectory(tuple(optimal))

    def stretch(i: int, horizon: float) -> AxisTrajectory:
        if abs(durations[i] - horizon) <= DURATION_TOL:
            return optimal[i]
        return axis_planner.plan(starts[i], targets[i], limits[i], Fixed(horizon))

    try:
        return MultiAxisTrajectory(tuple(_map(
            lambda i: optimal[i] if i == dominant else _annotated(i, lambda: stretch(i, total)),
            axes, parallel, workers)))
    except (InfeasibleDurationError, InfeasibleTargetError) as err:
        failed, cause = getattr(err, 'axis', dominant), err

    # a blocked duration interval on some axis; longer horizons re-open it
    for delta in RETRY_LADDER:
        horizon = total * (1.0 + delta)
        log.info('Axis %d not synchronizable at %.6g s, retrying at %.6g s', failed, total, horizon)
        try:
            return MultiAxisTrajectory(tuple(_map(lambda i: _annotated(i, lambda: stretch(i, horizon)), axes, parallel, workers)))
        except (InfeasibleDurationError, InfeasibleTargetError) as err:
            failed, cause = getattr(err, 'axis', failed), err
    raise SynchronizationError(failed, cause)


def evaluate_all(traj: MultiAxisTrajectory, t: float) -> List[AxisState]:
    return [axis_trajectory.evaluate(axis, t) for axis in traj.axes]


def split_all(traj: MultiAxisTrajectory, t: float) -> Tuple[MultiAxisTrajectory, MultiAxisTrajectory]:
    pieces = [axis_trajectory.split(axis, t) for axis in traj.axes]
    return (MultiAxisTrajectory(tuple(head for head, _ in pieces)),
        MultiAxisTrajectory(tuple(tail for _, tail in pieces)))


def concatenate_all(first: MultiAxisTrajectory, second: MultiAxisTrajectory) -> MultiAxisTrajectory:
    assert first.n_axes == second.n_axes, 'Axis counts differ'
    return MultiAxisTrajectory(tuple(
        axis_trajectory.concatenate(a, b) for a, b in zip(first.axes, second.axes)))
