"""Exact collision detection against moving axis-aligned boxes.

Each obstacle face moves on a piecewise constant-jerk path. Along every
axis the difference between the trajectory and a face is a polynomial of
degree <= 3 on each interval between breakpoints, so the times at which
the trajectory is inside an axis slab follow from its real roots. The
obstacle is hit when all axes are inside at once.
"""

import bisect
import logging
import math
import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from .axis_trajectory import AxisState, AxisTrajectory, evaluate
from .errors import InvalidEndpointError, InvalidStateError
from .multi_axis import MultiAxisTrajectory, evaluate_all
from .utilities import polyroots

log = logging.getLogger(__name__)

ROOT_TOL = 1e-9
INSIDE_TOL = 1e-9

Interval = Tuple[float, float]


# ===========
# BOUND PATHS
# ===========

@dataclass(frozen=True)
class BoundPiece:
    """Constant-jerk motion of one face, valid from start_time until the next piece."""

    start_time: float
    position: float
    velocity: float = 0.0
    acceleration: float = 0.0
    jerk: float = 0.0

    def __post_init__(self):
        for name in ('start_time', 'position', 'velocity', 'acceleration', 'jerk'):
            if not math.isfinite(getattr(self, name)):
                raise InvalidStateError('Bound piece {} must be finite'.format(name))

    def coeffs_at(self, t: float) -> np.ndarray:
        """Descending polynomial coefficients in tau = time - t."""
        tau = t - self.start_time
        j, a, v, p = self.jerk, self.acceleration, self.velocity, self.position
        return np.array([
            j / 6.0,
            (a + j * tau) / 2.0,
            v + tau * (a + tau * j / 2.0),
            p + tau * (v + tau * (a / 2.0 + tau * j / 6.0)),
        ])


@dataclass(frozen=True)
class BoundPath:
    """Piecewise constant-jerk face position; the first piece also covers earlier times, the last one extrapolates."""

    pieces: Tuple[BoundPiece, ...]

    def __post_init__(self):
        object.__setattr__(self, 'pieces', tuple(self.pieces))
        assert self.pieces, 'A bound path needs at least one piece'
        starts = [piece.start_time for piece in self.pieces]
        if any(b <= a for a, b in zip(starts[:-1], starts[1:])):
            raise InvalidStateError('Bound pieces must have increasing start times')

    @classmethod
    def static(cls, position: float) -> 'BoundPath':
        return cls((BoundPiece(0.0, position),))

    @classmethod
    def constant_velocity(cls, position: float, velocity: float) -> 'BoundPath':
        return cls((BoundPiece(0.0, position, velocity),))

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(piece.start_time for piece in self.pieces)

    @property
    def is_static(self) -> bool:
        return len(self.pieces) == 1 and self.pieces[0].velocity == 0 and self.pieces[0].acceleration == 0 and self.pieces[0].jerk == 0

    def piece_at(self, t: float) -> BoundPiece:
        idx = bisect.bisect_right(self.breakpoints, t) - 1
        return self.pieces[max(idx, 0)]

    def coeffs_at(self, t: float) -> np.ndarray:
        return self.piece_at(t).coeffs_at(t)

    def position_at(self, t: float) -> float:
        return float(self.coeffs_at(t)[-1])

    def shifted(self, dt: float) -> 'BoundPath':
        """Same motion with the time origin moved so that old time t becomes t - dt."""
        return BoundPath(tuple(
            BoundPiece(p.start_time - dt, p.position, p.velocity, p.acceleration, p.jerk) for p in self.pieces))

    def offset(self, delta: float) -> 'BoundPath':
        return BoundPath(tuple(
            BoundPiece(p.start_time, p.position + delta, p.velocity, p.acceleration, p.jerk) for p in self.pieces))


def _first_inversion(lower: BoundPath, upper: BoundPath) -> Optional[float]:
    """First time t >= 0 at which lower >= upper, or None."""
    times = sorted({0.0} | {t for t in lower.breakpoints + upper.breakpoints if t > 0})
    for idx, start in enumerate(times):
        gap = upper.coeffs_at(start) - lower.coeffs_at(start)
        if not gap[-1] > 0:
            return start
        if idx + 1 < len(times):
            roots = polyroots.real_roots_in(gap, 0.0, times[idx + 1] - start)
        else:
            roots = [r for r in polyroots.cubic_roots(*gap) if r >= 0]
        if roots:
            return start + min(roots)
    return None


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box whose faces move independently; inflation widens every axis on both sides."""

    lower: Tuple[BoundPath, ...]
    upper: Tuple[BoundPath, ...]
    inflation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'lower', tuple(self.lower))
        object.__setattr__(self, 'upper', tuple(self.upper))
        if len(self.lower) != len(self.upper) or not self.lower:
            raise InvalidStateError('Obstacle needs matching lower and upper bounds on at least one axis')
        if not (math.isfinite(self.inflation) and self.inflation >= 0):
            raise InvalidStateError('Obstacle inflation must be finite and >= 0')
        for axis, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            t = _first_inversion(lo, hi)
            if t is not None:
                raise InvalidStateError('Obstacle axis {} has lower >= upper at t={}'.format(axis, t))

    @classmethod
    def static(cls, lower: Sequence[float], upper: Sequence[float], inflation: float=0.0) -> 'Obstacle':
        return cls(tuple(BoundPath.static(x) for x in lower), tuple(BoundPath.static(x) for x in upper), inflation)

    @classmethod
    def moving(cls, lower: Sequence[float], upper: Sequence[float], velocity: Sequence[float], inflation: float=0.0) -> 'Obstacle':
        return cls(
            tuple(BoundPath.constant_velocity(x, v) for x, v in zip(lower, velocity)),
            tuple(BoundPath.constant_velocity(x, v) for x, v in zip(upper, velocity)),
            inflation)

    @property
    def n_axes(self) -> int:
        return len(self.lower)

    @property
    def is_static(self) -> bool:
        return all(path.is_static for path in self.lower + self.upper)

    def inflated(self, extra: float) -> 'Obstacle':
        return Obstacle(self.lower, self.upper, self.inflation + extra)

    def shifted(self, dt: float) -> 'Obstacle':
        return Obstacle(tuple(p.shifted(dt) for p in self.lower), tuple(p.shifted(dt) for p in self.upper), self.inflation)

    def bounds_at(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Inflated lower and upper bounds of every axis at time t."""
        lo = np.array([path.position_at(t) for path in self.lower]) - self.inflation
        hi = np.array([path.position_at(t) for path in self.upper]) + self.inflation
        return lo, hi

    def contains(self, point: Sequence[float], t: float, tol: float=INSIDE_TOL) -> bool:
        lo, hi = self.bounds_at(t)
        point = np.asarray(point, dtype=float)
        return bool(np.all((point >= lo - tol) & (point <= hi + tol)))


@dataclass(frozen=True)
class Crossing:

    time: float
    direction: str  # 'rising', 'falling', 'touch' or 'coincident'


@dataclass(frozen=True)
class CollisionInfo:
    """First instant at which every axis is inside the obstacle."""

    time: float
    states: Tuple[AxisState, ...]
    entering_axis: int
    intervals: Tuple[Tuple[Interval, ...], ...]


# =========
# CROSSINGS
# =========

def _difference_at(traj: AxisTrajectory, bound: BoundPath, offset: float, t: float) -> float:
    return evaluate(traj, t).position - bound.position_at(t) - offset


def _difference_coeffs(traj: AxisTrajectory, bound: BoundPath, offset: float, t: float) -> np.ndarray:
    state = evaluate(traj, t)
    jerk = traj.jerk_at(t)
    own = np.array([jerk / 6.0, state.acceleration / 2.0, state.velocity, state.position - offset])
    return own - bound.coeffs_at(t)


def axis_crossings(axis_traj: AxisTrajectory, bound: BoundPath, horizon: float, offset: float=0.0) -> List[Crossing]:
    """Times in [0, horizon] at which the axis position meets bound + offset.

    Returns:
        sorted crossings tagged 'rising' (trajectory passes from below to
        above), 'falling', 'touch' (tangential contact) or 'coincident'
        (endpoints of a stretch where both move identically)
    """
    assert horizon <= axis_traj.total_duration + 1e-9, 'Horizon exceeds the trajectory'
    breaks = {0.0, horizon}
    breaks.update(t for t in axis_traj.phase_times if 0 < t < horizon)
    breaks.update(t for t in bound.breakpoints if 0 < t < horizon)
    breaks = sorted(breaks)

    roots, coincident = [], []
    for t0, t1 in zip(breaks[:-1], breaks[1:]):
        coeffs = _difference_coeffs(axis_traj, bound, offset, t0)
        scale = max(1.0, abs(bound.position_at(t0)) + abs(offset))
        if polyroots.is_identically_zero(coeffs, 1e-12 * scale):
            coincident += [t0, t1]
            continue
        span = t1 - t0
        roots += [t0 + tau for tau in polyroots.real_roots_in(coeffs, 0.0, span)]
        # tangential contact that round-off kept off the axis
        for tau in polyroots.real_roots_in(np.polyder(coeffs), 0.0, span):
            if abs(np.polyval(coeffs, tau)) <= ROOT_TOL * scale:
                roots.append(t0 + tau)

    roots = polyroots.dedup(roots, ROOT_TOL)
    crossings = [Crossing(t, 'coincident') for t in polyroots.dedup(coincident, ROOT_TOL)]
    for idx, t in enumerate(roots):
        if any(abs(t - c.time) <= ROOT_TOL for c in crossings):
            continue
        left = _difference_at(axis_traj, bound, offset, (roots[idx - 1] + t) / 2) if idx > 0 else (
            _difference_at(axis_traj, bound, offset, t / 2) if t > 0 else None)
        right_end = roots[idx + 1] if idx + 1 < len(roots) else horizon
        right = _difference_at(axis_traj, bound, offset, (t + right_end) / 2) if right_end > t else None
        if left is None:
            left = -right if right is not None else 0.0
        if right is None:
            right = -left
        if left < 0 < right:
            direction = 'rising'
        elif left > 0 > right:
            direction = 'falling'
        else:
            direction = 'touch'
        crossings.append(Crossing(t, direction))
    return sorted(crossings, key=lambda c: c.time)


# =========
# INTERVALS
# =========

def _merge(intervals: List[Interval], gap: float=1e-12) -> List[Interval]:
    merged = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def inside_intervals(axis_traj: AxisTrajectory, lower: BoundPath, upper: BoundPath, inflation: float, horizon: float) -> List[Interval]:
    """Closed time intervals during which the axis lies between the inflated faces."""
    events = {0.0, horizon}
    events.update(c.time for c in axis_crossings(axis_traj, lower, horizon, -inflation))
    events.update(c.time for c in axis_crossings(axis_traj, upper, horizon, inflation))
    events = sorted(events)

    def inside(t: float) -> bool:
        p = evaluate(axis_traj, t).position
        return lower.position_at(t) - inflation - INSIDE_TOL <= p <= upper.position_at(t) + inflation + INSIDE_TOL

    intervals = [(t, t) for t in events if inside(t)]
    intervals += [(t0, t1) for t0, t1 in zip(events[:-1], events[1:]) if inside((t0 + t1) / 2)]
    return _merge(intervals)


def intersect_intervals(per_axis: Sequence[Sequence[Interval]]) -> List[Interval]:
    """Times at which every axis is inside, by a sweep over interval endpoints.

    Starts sort before ends at equal times so that touching intervals
    intersect in a single instant.
    """
    n = len(per_axis)
    sweep = sorted([(lo, 0) for intervals in per_axis for lo, _ in intervals]
        + [(hi, 1) for intervals in per_axis for _, hi in intervals])
    out, count, opened = [], 0, None
    for t, kind in sweep:
        if kind == 0:
            count += 1
            if count == n:
                opened = t
        else:
            if count == n:
                out.append((opened, t))
            count -= 1
    return out


# ==========
# OPERATIONS
# ==========

def first_collision(traj: MultiAxisTrajectory, obstacle: Obstacle) -> Optional[CollisionInfo]:
    """Earliest time at which the trajectory is inside the inflated obstacle.

    Raises:
        InvalidEndpointError: the start or end state lies inside the obstacle
    """
    assert traj.n_axes == obstacle.n_axes, 'Trajectory and obstacle axis counts differ'
    horizon = traj.total_duration
    for label, t in (('start', 0.0), ('end', horizon)):
        point = [state.position for state in evaluate_all(traj, t)]
        if obstacle.contains(point, t):
            raise InvalidEndpointError('Trajectory {} {} lies inside the obstacle'.format(label, point))

    per_axis = []
    for axis_traj, lo, hi in zip(traj.axes, obstacle.lower, obstacle.upper):
        intervals = inside_intervals(axis_traj, lo, hi, obstacle.inflation, horizon)
        if not intervals:
            return None
        per_axis.append(tuple(intervals))

    overlap = intersect_intervals(per_axis)
    if not overlap:
        return None
    t = overlap[0][0]
    # the axis whose slab was entered last
    entered = [max((lo for lo, hi in intervals if lo <= t + ROOT_TOL), default=-math.inf) for intervals in per_axis]
    entering_axis = int(np.argmax(entered))
    return CollisionInfo(t, tuple(evaluate_all(traj, t)), entering_axis, tuple(per_axis))


def collides_any(traj: MultiAxisTrajectory, obstacles: Sequence[Obstacle]) -> Optional[Tuple[int, CollisionInfo]]:
    """Earliest collision over all obstacles; ties go to the lowest index."""
    best = None
    for idx, obstacle in enumerate(obstacles):
        info = first_collision(traj, obstacle)
        if info is not None and (best is None or info.time < best[1].time):
            best = (idx, info)
    return best


def clearance(positions: Sequence[float], obstacle: Obstacle, t: float) -> float:
    """Signed distance to the inflated obstacle along the most separating axis; negative inside."""
    lo, hi = obstacle.bounds_at(t)
    point = np.asarray(positions, dtype=float)
    return float(np.max(np.maximum(lo - point, point - hi)))
