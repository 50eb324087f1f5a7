"""Viastate construction for evading a detected collision.

A candidate binds two axes to one corner of the obstacle's cross-section
in their plane; the trajectory then runs start -> viastate -> target. On
the bound axes the viastate sits on the inflated corner with zero
acceleration and a velocity chosen to minimize the two-segment time; the
remaining (free) axes either follow the bound timing or, when slower,
impose their own.
"""

import itertools
import logging
import math
import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from . import axis_planner
from .axis_planner import Fixed, PartialTarget, TIME_OPTIMAL
from .axis_trajectory import AxisLimits, AxisState, AxisTrajectory, concatenate, evaluate
from .collision import CollisionInfo, Obstacle, first_collision
from .errors import (
    CandidateFailedError, DegenerateCandidateError, InfeasibleDurationError, InfeasibleTargetError,
    InvalidStateError, PlannerError, TradeoffError,
)
from .multi_axis import MultiAxisTrajectory, plan_synchronized
from .utilities import polyroots

log = logging.getLogger(__name__)

CORNER_CLEARANCE = 1e-7
VELOCITY_TOL = 1e-9


# =====
# TYPES
# =====

@dataclass(frozen=True)
class CandidateSpec:
    """Two bound axes and the face of the side axis the viastate corner lies on."""

    bound_axes: Tuple[int, int]
    main_axis: int
    side_axis: int
    side: int

    def __post_init__(self):
        assert self.bound_axes[0] < self.bound_axes[1], 'Bound axes must be distinct and sorted'
        assert {self.main_axis, self.side_axis} == set(self.bound_axes), 'Main and side axis must be the bound axes'
        assert self.side in (-1, 1), 'Side must be -1 or +1'

    @property
    def label(self) -> str:
        return '{}/{}{}'.format(self.bound_axes[0], self.bound_axes[1], '+' if self.side > 0 else '-')


@dataclass(frozen=True)
class Viastate:
    states: Tuple[AxisState, ...]
    pass_time: float


@dataclass(frozen=True)
class TradeoffCurve:
    """Quadratic a*s^2 + b*s + c in one bound-velocity coordinate."""

    a: float
    b: float
    c: float

    def __call__(self, s):
        return (self.a * s + self.b) * s + self.c


@dataclass(frozen=True)
class BoundVelocity:
    """Viastate velocity of the bound axes (in pair order) and the resulting segment durations."""

    velocity: Tuple[float, float]
    first_duration: float
    second_duration: float
    case: str


@dataclass(frozen=True)
class TradeoffPoints:
    """Points of the two-segment tradeoff in (first-dominant axis, second-dominant axis) velocity coordinates."""

    p1: Tuple[float, float]
    p2: Tuple[float, float]
    p3: Tuple[float, float]
    p4: Tuple[float, float]
    p5: Tuple[float, float]
    p6: Tuple[float, float]
    p7: Tuple[float, float]
    p8: Tuple[float, float]
    p9: Optional[Tuple[float, float]] = None
    p10: Optional[Tuple[float, float]] = None
    case: int = 0


@dataclass(frozen=True)
class FreeAxes:
    """Free-axis plans, their states at the pass time, and the total duration they settle on."""

    trajectories: Tuple[AxisTrajectory, ...]
    states: Tuple[AxisState, ...]
    pass_time: float
    total: float
    dominant: bool


@dataclass(frozen=True)
class Evasion:
    """An evading trajectory with the viastate it passes."""

    trajectory: MultiAxisTrajectory
    viastate: Viastate
    candidate: CandidateSpec
    main_face: int
    case: str


# ==========
# CANDIDATES
# ==========

def candidate_count(n_axes: int) -> int:
    """Number of evading trajectories before pruning: ordered pairs of bound axes."""
    return math.perm(n_axes, 2)


def enumerate_candidates(n_axes: int, collision: CollisionInfo, prune: bool=True) -> List[CandidateSpec]:
    """Bound-axis pairs with both sides each.

    The main axis of a pair is its member moving fastest at the collision.
    With prune=True only pairs containing the globally fastest axis are kept.
    """
    if n_axes < 2:
        raise InvalidStateError('Evasion needs at least two axes, got {}'.format(n_axes))
    speeds = [abs(state.velocity) for state in collision.states]
    fastest = int(np.argmax(speeds))

    candidates = []
    for pair in itertools.combinations(range(n_axes), 2):
        if prune and fastest not in pair:
            continue
        main = pair[0] if speeds[pair[0]] >= speeds[pair[1]] else pair[1]
        side_axis = pair[1] if main == pair[0] else pair[0]
        for side in (-1, 1):
            candidates.append(CandidateSpec(pair, main, side_axis, side))
    return candidates


def corner_position(obstacle: Obstacle, axis: int, face: int, t: float) -> float:
    """Inflated face position of one axis at time t, pushed out by CORNER_CLEARANCE."""
    lo, hi = obstacle.bounds_at(t)
    if face > 0:
        return float(hi[axis]) + CORNER_CLEARANCE
    return float(lo[axis]) - CORNER_CLEARANCE


# ========
# TRADEOFF
# ========

def fit_tradeoff(p_a: Sequence[float], p_mid: Sequence[float], p_b: Sequence[float]) -> TradeoffCurve:
    """Quadratic y(x) through three (x, y) points."""
    xs = np.array([p_a[0], p_mid[0], p_b[0]], dtype=float)
    ys = np.array([p_a[1], p_mid[1], p_b[1]], dtype=float)
    scale = max(1.0, float(np.max(np.abs(xs))))
    if min(abs(xs[0] - xs[1]), abs(xs[1] - xs[2]), abs(xs[0] - xs[2])) <= 1e-12 * scale:
        raise TradeoffError('Tradeoff points share an abscissa: {}'.format(xs))
    a, b, c = np.linalg.solve(np.vander(xs, 3), ys)
    return TradeoffCurve(float(a), float(b), float(c))


def intersect_tradeoffs(first: TradeoffCurve, second: TradeoffCurve,
        bracket: Tuple[Tuple[float, float], Tuple[float, float]]) -> Tuple[float, float]:
    """Intersection of y = first(x) and x = second(y) inside bracket ((x_lo, x_hi), (y_lo, y_hi)).

    Substituting the first curve into the second gives a quartic in x.
    Among several admissible roots the one closest to the bracket center wins.
    """
    a1, b1, c1 = first.a, first.b, first.c
    a2, b2, c2 = second.a, second.b, second.c
    quartic = (
        a1 * a1 * a2,
        2 * a1 * b1 * a2,
        2 * a1 * c1 * a2 + b1 * b1 * a2 + a1 * b2,
        2 * b1 * c1 * a2 + b1 * b2 - 1,
        c1 * c1 * a2 + c1 * b2 + c2,
    )
    (x_lo, x_hi), (y_lo, y_hi) = [sorted(pair) for pair in bracket]
    tol_x = 1e-9 * max(1.0, abs(x_lo), abs(x_hi))
    tol_y = 1e-9 * max(1.0, abs(y_lo), abs(y_hi))

    admissible = []
    roots = [] if polyroots.is_identically_zero(quartic, 1e-15) else polyroots.quartic_roots(*quartic)
    for x in roots:
        y = first(x)
        if x_lo - tol_x <= x <= x_hi + tol_x and y_lo - tol_y <= y <= y_hi + tol_y:
            admissible.append((x, y))
    if not admissible:
        raise TradeoffError('Tradeoff curves do not intersect in {}'.format(bracket))
    center = ((x_lo + x_hi) / 2, (y_lo + y_hi) / 2)
    return min(admissible, key=lambda p: (p[0] - center[0]) ** 2 + (p[1] - center[1]) ** 2)


# ==============
# BOUND SEGMENTS
# ==============

class BoundSegments:
    """Segment problems of the two bound axes around a fixed viastate position.

    Axis k runs from starts[k] to the viastate (position via[k], zero
    acceleration) and on to targets[k]. Durations and reachable velocity
    intervals are cached since the tradeoff construction revisits them.
    """

    def __init__(self, starts: Sequence[AxisState], targets: Sequence[AxisState], via: Sequence[float], limits: Sequence[AxisLimits]):
        self.starts = tuple(starts)
        self.targets = tuple(targets)
        self.via = tuple(via)
        self.limits = tuple(limits)
        self._cache = {}

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def via_state(self, k: int, velocity: float) -> AxisState:
        return AxisState(self.via[k], velocity, 0.0)

    def free_first(self, k: int) -> AxisTrajectory:
        """Time-optimal first segment with free viastate velocity."""
        return self._cached(('free_first', k), lambda: axis_planner.plan(
            self.starts[k], PartialTarget(self.via[k], None, 0.0), self.limits[k], TIME_OPTIMAL))

    def free_second(self, k: int) -> AxisTrajectory:
        """Time-optimal second segment with free viastate velocity, planned backwards from the target."""
        return self._cached(('free_second', k), lambda: axis_planner.plan_reverse(
            self.targets[k], PartialTarget(self.via[k], None, 0.0), self.limits[k], TIME_OPTIMAL))

    def first_time(self, k: int, velocity: float) -> float:
        return self._cached(('first_time', k, velocity), lambda: axis_planner.plan(
            self.starts[k], PartialTarget.from_state(self.via_state(k, velocity)), self.limits[k]).total_duration)

    def second_time(self, k: int, velocity: float) -> float:
        return self._cached(('second_time', k, velocity), lambda: axis_planner.plan(
            self.via_state(k, velocity), PartialTarget.from_state(self.targets[k]), self.limits[k]).total_duration)

    def first_interval(self, k: int, total: float) -> Tuple[float, float]:
        return self._cached(('first_interval', k, total), lambda: axis_planner.reachable_velocity_interval(
            self.starts[k], self.via[k], total, self.limits[k], end_acceleration=0.0))

    def second_interval(self, k: int, total: float) -> Tuple[float, float]:
        return self._cached(('second_interval', k, total), lambda: axis_planner.reachable_velocity_interval(
            self.targets[k], self.via[k], total, self.limits[k], end_acceleration=0.0, reverse=True))

    def durations(self, velocity: Sequence[float]) -> Tuple[float, float]:
        """Synchronized segment durations for a viastate velocity of both axes."""
        return (max(self.first_time(k, velocity[k]) for k in (0, 1)),
            max(self.second_time(k, velocity[k]) for k in (0, 1)))


def _endpoint(interval: Tuple[float, float], direction: float) -> float:
    return interval[1] if direction > 0 else interval[0]


def _closer(interval: Tuple[float, float], goal: float) -> Tuple[float, float]:
    """(far, near) endpoints of an interval relative to goal."""
    lo, hi = interval
    return (lo, hi) if abs(hi - goal) <= abs(lo - goal) else (hi, lo)


def _between(value: float, ends: Tuple[float, float]) -> bool:
    lo, hi = min(ends), max(ends)
    tol = VELOCITY_TOL * max(1.0, abs(lo), abs(hi))
    return lo - tol <= value <= hi + tol


def build_tradeoff_points(segments: BoundSegments, first_axis: int, second_axis: int) -> TradeoffPoints:
    """Constructs p1..p10 and classifies the multiple-influence case.

    first_axis dominates the first segment, second_axis the second one.
    Coordinates are (velocity of first_axis, velocity of second_axis).
    """
    A, B = first_axis, second_axis
    vA = segments.free_first(A).end_state.velocity
    vB = segments.free_second(B).start.velocity

    # reachable B-velocities while A gains its optimum, and vice versa
    far, near = _closer(segments.first_interval(B, segments.free_first(A).total_duration), vB)
    p1, p2 = (vA, far), (vA, near)
    dir1 = np.sign(near - far)
    far, near = _closer(segments.second_interval(A, segments.free_second(B).total_duration), vA)
    p3, p4 = (far, vB), (near, vB)
    dir2 = np.sign(near - far)

    lo_hi = segments.first_interval(B, segments.first_time(A, p4[0]))
    p6 = (p4[0], _endpoint(lo_hi, dir1))
    p5 = (p4[0], _endpoint(lo_hi, -dir1))
    lo_hi = segments.second_interval(A, segments.second_time(B, p2[1]))
    p8 = (_endpoint(lo_hi, dir2), p2[1])
    p7 = (_endpoint(lo_hi, -dir2), p2[1])

    first_ok = _between(p2[0], (p7[0], p8[0]))
    second_ok = _between(p4[1], (p5[1], p6[1]))
    if first_ok and second_ok:
        case = 1
    elif first_ok:
        case = 2
    elif second_ok:
        case = 3
    else:
        case = 4

    p9 = p10 = None
    if case == 4:
        x9 = (p2[0] + p6[0]) / 2
        p9 = (x9, _endpoint(segments.first_interval(B, segments.first_time(A, x9)), dir1))
        y10 = (p4[1] + p8[1]) / 2
        p10 = (_endpoint(segments.second_interval(A, segments.second_time(B, y10)), dir2), y10)
    return TradeoffPoints(p1, p2, p3, p4, p5, p6, p7, p8, p9, p10, case)


def _multiple_influence(segments: BoundSegments, first_axis: int, second_axis: int) -> Tuple[Tuple[float, float], str]:
    pts = build_tradeoff_points(segments, first_axis, second_axis)
    if pts.case == 1:
        chosen, label = (pts.p2[0], pts.p4[1]), 'both-optimal'
    elif pts.case == 2:
        chosen, label = pts.p2, 'first-dominates'
    elif pts.case == 3:
        chosen, label = pts.p4, 'second-dominates'
    elif abs(pts.p2[0] - pts.p6[0]) <= VELOCITY_TOL or abs(pts.p4[1] - pts.p8[1]) <= VELOCITY_TOL:
        chosen, label = (pts.p4[0], pts.p2[1]), 'tradeoff'
    else:
        try:
            first = fit_tradeoff(pts.p2, pts.p9, pts.p6)
            second = fit_tradeoff(*[(y, x) for x, y in (pts.p4, pts.p10, pts.p8)])
            chosen = intersect_tradeoffs(first, second, ((pts.p2[0], pts.p6[0]), (pts.p4[1], pts.p8[1])))
            label = 'tradeoff'
        except TradeoffError as err:
            log.debug('%s, using the single-influence optimum', err)
            chosen = min((pts.p2, pts.p4), key=lambda point: sum(segments.durations(_in_pair_order(point, first_axis, second_axis))))
            label = 'single-influence'
    return _in_pair_order(chosen, first_axis, second_axis), label


def _in_pair_order(point: Tuple[float, float], first_axis: int, second_axis: int) -> Tuple[float, float]:
    velocity = [0.0, 0.0]
    velocity[first_axis], velocity[second_axis] = point
    return tuple(velocity)


def free_component_interval(segments: BoundSegments, dominant: int, velocity: float, away: int) -> Optional[float]:
    """Velocity of the non-dominant bound axis that leaves both segment times unchanged.

    Returns the endpoint of the feasible interval pointing away from the
    obstacle, or None when the segment intervals do not overlap.
    """
    other = 1 - dominant
    first = segments.first_interval(other, segments.first_time(dominant, velocity))
    second = segments.second_interval(other, segments.second_time(dominant, velocity))
    lo, hi = max(first[0], second[0]), min(first[1], second[1])
    if lo > hi + VELOCITY_TOL * max(1.0, abs(lo)):
        return None
    lo, hi = min(lo, hi), max(lo, hi)
    return hi if away > 0 else lo


def optimal_bound_velocity(starts: Sequence[AxisState], targets: Sequence[AxisState], via: Sequence[float],
        limits: Sequence[AxisLimits], away: Sequence[int]=(1, 1)) -> BoundVelocity:
    """Viastate velocity of the two bound axes minimizing the two-segment time.

    Args:
        starts, targets: full states of both bound axes
        via: viastate position of both bound axes
        limits: limits of both bound axes
        away: per axis, the velocity sign pointing away from the obstacle

    Returns:
        BoundVelocity with the chosen velocity and synchronized segment durations
    """
    on_start = all(abs(via[k] - starts[k].position) <= 1e-9 for k in (0, 1))
    on_target = all(abs(via[k] - targets[k].position) <= 1e-9 for k in (0, 1))
    if on_start or on_target:
        raise DegenerateCandidateError('Viastate {} coincides with {} on both bound axes'.format(
            via, 'start' if on_start else 'target'))

    segments = BoundSegments(starts, targets, via, limits)
    T1 = [segments.free_first(k).total_duration for k in (0, 1)]
    T2 = [segments.free_second(k).total_duration for k in (0, 1)]
    d1, d2 = int(np.argmax(T1)), int(np.argmax(T2))

    velocity = None
    if d1 == d2:
        v_first = segments.free_first(d1).end_state.velocity
        v_second = segments.free_second(d1).start.velocity
        if v_first * v_second < 0:
            v_dom, label = 0.0, 'zero'
        elif v_first >= 0 and v_second >= 0:
            v_dom, label = min(v_first, v_second), 'minimum'
        else:
            v_dom, label = max(v_first, v_second), 'maximum'
        v_other = free_component_interval(segments, d1, v_dom, away[1 - d1])
        if v_other is not None:
            velocity = [0.0, 0.0]
            velocity[d1], velocity[1 - d1] = v_dom, v_other
            velocity = tuple(velocity)
        else:
            log.debug('Empty free-component interval on axis %d, using the tradeoff construction', 1 - d1)

    if velocity is None:
        velocity, label = _multiple_influence(segments, d1, d2 if d2 != d1 else 1 - d1)

    first_duration, second_duration = segments.durations(velocity)
    return BoundVelocity(velocity, first_duration, second_duration, label)


# ========
# ASSEMBLY
# ========

def _segment(start: AxisState, target: AxisState, limits: AxisLimits, total: float) -> AxisTrajectory:
    return axis_planner.plan(start, PartialTarget.from_state(target), limits, Fixed(total))


def _common_interval(segments: BoundSegments, k: int, first: float, second: float) -> Tuple[float, float]:
    """Viastate velocities of bound axis k that both fixed-duration segments can reach."""
    lo1, hi1 = segments.first_interval(k, first)
    lo2, hi2 = segments.second_interval(k, second)
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    if lo > hi + VELOCITY_TOL:
        raise InfeasibleDurationError('Axis {} cannot pass the viastate at {:.6g} s'.format(k, first))
    return min(lo, hi), max(lo, hi)


def _bound_axis(segments: BoundSegments, k: int, velocity: float, first: float, second: float) -> Tuple[AxisTrajectory, float]:
    """Both fixed-duration segments of bound axis k through its viastate.

    A velocity outside (or on the edge of) the reachable interval is moved
    inside, step by step towards its middle, until both segments plan.
    """
    tried, cause = [], None
    for step in range(5):
        if step == 0:
            v = velocity
        else:
            lo, hi = _common_interval(segments, k, first, second)
            clipped = min(max(velocity, lo), hi)
            v = clipped + (0.0, 0.0, 1e-7, 1e-4, 0.5)[step] * ((lo + hi) / 2 - clipped)
        if v in tried:
            continue
        tried.append(v)
        via_state = segments.via_state(k, v)
        try:
            head = _segment(segments.starts[k], via_state, segments.limits[k], first)
            tail = _segment(via_state, segments.targets[k], segments.limits[k], second)
        except (InfeasibleDurationError, InfeasibleTargetError) as err:
            cause = err
            continue
        return concatenate(head, tail), v
    raise cause


def free_axis_viastates(bound: BoundVelocity, starts: Sequence[AxisState], targets: Sequence[PartialTarget],
        limits: Sequence[AxisLimits]) -> FreeAxes:
    """Plans the free axes against the timing of the bound axes.

    When every free axis fits into the bound duration, the free axes are
    synchronized to it and pass their viastate at the bound pass time.
    Otherwise the slowest free axis sets the total and the pass time keeps
    the bound ratio of first to second segment duration.
    """
    T1, T2 = bound.first_duration, bound.second_duration
    if not starts:
        return FreeAxes((), (), T1, T1 + T2, False)

    optimal = max(axis_planner.plan(s, t, l).total_duration for s, t, l in zip(starts, targets, limits))
    dominant = optimal > T1 + T2 + 1e-9
    if dominant:
        synced = plan_synchronized(starts, targets, limits, parallel=False)
        total = synced.total_duration
        pass_time = total * T1 / (T1 + T2)
        log.debug('Free axes dominate: %.6g s against %.6g s bound', total, T1 + T2)
    else:
        total, pass_time = T1 + T2, T1
        synced = plan_synchronized(starts, targets, limits, duration=total, parallel=False)
    states = tuple(evaluate(traj, pass_time) for traj in synced.axes)
    return FreeAxes(synced.axes, states, pass_time, total, dominant)


def _assemble(starts, targets, limits, candidate: CandidateSpec, segments: BoundSegments, bound: BoundVelocity) -> Tuple[MultiAxisTrajectory, Viastate]:
    n = len(starts)
    pair = candidate.bound_axes
    free = [k for k in range(n) if k not in pair]
    free_axes = free_axis_viastates(bound, [starts[k] for k in free], [targets[k] for k in free], [limits[k] for k in free])
    pass_time, total = free_axes.pass_time, free_axes.total

    axes = [None] * n
    # with dominant free axes the bound segments are stretched to the free timing
    for i, k in enumerate(pair):
        axes[k], _ = _bound_axis(segments, i, bound.velocity[i], pass_time, total - pass_time)
    for k, traj in zip(free, free_axes.trajectories):
        axes[k] = traj

    trajectory = MultiAxisTrajectory(tuple(axes))
    viastate = Viastate(tuple(evaluate(traj, pass_time) for traj in axes), pass_time)
    return trajectory, viastate


def _evade_face(starts, targets, limits, obstacle: Obstacle, collision: CollisionInfo, candidate: CandidateSpec,
        main_face: int, config) -> Evasion:
    pair = candidate.bound_axes
    faces = {candidate.main_axis: main_face, candidate.side_axis: candidate.side}
    bound_targets = [targets[k] for k in pair]
    away = tuple(faces[k] for k in pair)

    pass_time = collision.time
    iterations = 1 if obstacle.is_static else max(1, config.corner_iterations)
    converged = obstacle.is_static
    for _ in range(iterations):
        via = [corner_position(obstacle, k, faces[k], pass_time) for k in pair]
        segments = BoundSegments([starts[k] for k in pair], bound_targets, via, [limits[k] for k in pair])
        bound = optimal_bound_velocity(segments.starts, segments.targets, via, segments.limits, away)
        trajectory, viastate = _assemble(starts, targets, limits, candidate, segments, bound)
        change = abs(viastate.pass_time - pass_time)
        pass_time = viastate.pass_time
        if change < config.corner_tolerance:
            converged = True
            break
    if not converged:
        raise CandidateFailedError(candidate, PlannerError('Corner timing did not converge'))
    return Evasion(trajectory, viastate, candidate, main_face, bound.case)


def evade(starts: Sequence[AxisState], targets: Sequence[PartialTarget], limits: Sequence[AxisLimits],
        direct: MultiAxisTrajectory, obstacle: Obstacle, collision: CollisionInfo, candidate: CandidateSpec, config) -> Evasion:
    """Fastest evading trajectory of one candidate that clears the obstacle.

    Both faces of the main axis are tried for the viastate corner. Bound
    axes aim at the end state of the direct trajectory.

    Raises:
        CandidateFailedError: no face yields a collision-free trajectory
    """
    full_targets = [direct.axes[k].end_state if k in candidate.bound_axes else targets[k] for k in range(len(starts))]
    evasions, cause = [], None
    for main_face in (-1, 1):
        try:
            evasion = _evade_face(starts, full_targets, limits, obstacle, collision, candidate, main_face, config)
            if first_collision(evasion.trajectory, obstacle) is None:
                evasions.append(evasion)
            else:
                cause = PlannerError('Corner on face {} still collides'.format(main_face))
        except CandidateFailedError as err:
            cause = err.cause
        except PlannerError as err:
            log.debug('Candidate %s face %d failed: %s', candidate.label, main_face, err)
            cause = err
    if not evasions:
        raise CandidateFailedError(candidate, cause)
    return min(evasions, key=lambda e: (e.trajectory.total_duration, e.main_face))


def build_evading_trajectory(starts: Sequence[AxisState], targets: Sequence[PartialTarget], limits: Sequence[AxisLimits],
        direct: MultiAxisTrajectory, obstacle: Obstacle, collision: CollisionInfo, candidate: CandidateSpec, config) -> MultiAxisTrajectory:
    return evade(starts, targets, limits, direct, obstacle, collision, candidate, config).trajectory
