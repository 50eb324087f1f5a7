"""Value types and exact evaluation of piecewise constant-jerk trajectories."""

import bisect
import math
import numpy as np
from dataclasses import dataclass, field
from typing import Optional, Tuple
from .errors import ContinuityError, InvalidStateError, OutOfRangeError
from .utilities import polyroots

MIN_PHASE_DURATION = 1e-12
CONTINUITY_TOL = 1e-6
TIME_TOL = 1e-9


def _check_finite(**values):
    for name, value in values.items():
        if value is None or not math.isfinite(value):
            raise InvalidStateError('{} must be finite, got {}'.format(name, value))


# ===========
# STATE TYPES
# ===========

@dataclass(frozen=True)
class AxisState:
    """Position, velocity and acceleration of one axis."""

    position: float
    velocity: float
    acceleration: float

    def __post_init__(self):
        _check_finite(position=self.position, velocity=self.velocity, acceleration=self.acceleration)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.position, self.velocity, self.acceleration)

    def reversed(self) -> 'AxisState':
        """State seen under time reversal (velocity changes sign)."""
        return AxisState(self.position, -self.velocity, self.acceleration)

    def isclose(self, other: 'AxisState', tol: float=CONTINUITY_TOL) -> bool:
        return all(abs(x - y) <= tol for x, y in zip(self.as_tuple(), other.as_tuple()))


@dataclass(frozen=True)
class JerkPhase:

    duration: float
    jerk: float

    def __post_init__(self):
        _check_finite(duration=self.duration, jerk=self.jerk)
        if self.duration < 0:
            raise InvalidStateError('Phase duration must be >= 0, got {}'.format(self.duration))


@dataclass(frozen=True)
class AxisLimits:
    """Velocity, acceleration and jerk bounds of one axis. None means unbounded."""

    velocity_min: Optional[float] = None
    velocity_max: Optional[float] = None
    acceleration_min: Optional[float] = None
    acceleration_max: Optional[float] = None
    jerk_min: Optional[float] = None
    jerk_max: Optional[float] = None

    def __post_init__(self):
        for lo, hi, name in (
            (self.velocity_min, self.velocity_max, 'velocity'),
            (self.acceleration_min, self.acceleration_max, 'acceleration'),
            (self.jerk_min, self.jerk_max, 'jerk'),
        ):
            for bound in (lo, hi):
                if bound is not None and not math.isfinite(bound):
                    raise InvalidStateError('{} limit must be finite or None, got {}'.format(name, bound))
            if lo is not None and hi is not None and not lo < hi:
                raise InvalidStateError('{} limits must satisfy min < max'.format(name))
        if self.jerk_max is not None and self.jerk_max <= 0:
            raise InvalidStateError('jerk_max must be positive')
        if self.jerk_min is not None and self.jerk_min >= 0:
            raise InvalidStateError('jerk_min must be negative')

    @classmethod
    def symmetric(cls, velocity: float=None, acceleration: float=None, jerk: float=None) -> 'AxisLimits':
        neg = lambda x: None if x is None else -x
        return cls(neg(velocity), velocity, neg(acceleration), acceleration, neg(jerk), jerk)

    @property
    def v_bounds(self) -> Tuple[float, float]:
        return _bounds(self.velocity_min, self.velocity_max)

    @property
    def a_bounds(self) -> Tuple[float, float]:
        return _bounds(self.acceleration_min, self.acceleration_max)

    @property
    def j_bounds(self) -> Tuple[float, float]:
        return _bounds(self.jerk_min, self.jerk_max)

    def reversed(self) -> 'AxisLimits':
        """Limits under time reversal: velocity and jerk bounds swap and change sign."""
        neg = lambda x: None if x is None else -x
        return AxisLimits(
            neg(self.velocity_max), neg(self.velocity_min),
            self.acceleration_min, self.acceleration_max,
            neg(self.jerk_max), neg(self.jerk_min),
        )

    def without_velocity(self) -> 'AxisLimits':
        return AxisLimits(None, None, self.acceleration_min, self.acceleration_max, self.jerk_min, self.jerk_max)


def _bounds(lo: Optional[float], hi: Optional[float]) -> Tuple[float, float]:
    return (-math.inf if lo is None else lo, math.inf if hi is None else hi)


# ==========
# TRAJECTORY
# ==========

@dataclass(frozen=True)
class AxisTrajectory:
    """Start state followed by constant-jerk phases.

    Phases shorter than MIN_PHASE_DURATION are dropped at construction.
    Boundary states are integrated once so that evaluation only has to
    step through a single phase.
    """

    start: AxisState
    phases: Tuple[JerkPhase, ...] = ()
    _times: Tuple[float, ...] = field(init=False, repr=False, compare=False)
    _knots: Tuple[Tuple[float, float, float], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        phases = tuple(ph for ph in self.phases if ph.duration >= MIN_PHASE_DURATION)
        object.__setattr__(self, 'phases', phases)

        times = [0.0]
        knots = [self.start.as_tuple()]
        for phase in phases:
            knots.append(advance(knots[-1], phase.jerk, phase.duration))
            times.append(times[-1] + phase.duration)
        object.__setattr__(self, '_times', tuple(times))
        object.__setattr__(self, '_knots', tuple(knots))

    @property
    def total_duration(self) -> float:
        return self._times[-1]

    @property
    def end_state(self) -> AxisState:
        return AxisState(*self._knots[-1])

    @property
    def phase_times(self) -> Tuple[float, ...]:
        """Phase boundary times, starting with 0."""
        return self._times

    @property
    def jerks(self) -> Tuple[float, ...]:
        return tuple(ph.jerk for ph in self.phases)

    def knot(self, idx: int) -> AxisState:
        return AxisState(*self._knots[idx])

    def jerk_at(self, t: float) -> float:
        """Jerk of the phase active at t (right-continuous, last phase at the end)."""
        if not self.phases:
            return 0.0
        idx = min(bisect.bisect_right(self._times, t) - 1, len(self.phases) - 1)
        return self.phases[max(idx, 0)].jerk

    def mirrored(self) -> 'AxisTrajectory':
        """The same path traversed backwards in time."""
        phases = tuple(JerkPhase(ph.duration, -ph.jerk) for ph in reversed(self.phases))
        return AxisTrajectory(self.end_state.reversed(), phases)

    def shifted(self, offset: float) -> 'AxisTrajectory':
        """Copy with every position offset by a constant."""
        start = AxisState(self.start.position + offset, self.start.velocity, self.start.acceleration)
        return AxisTrajectory(start, self.phases)


def advance(state: Tuple[float, float, float], jerk: float, tau: float) -> Tuple[float, float, float]:
    p, v, a = state
    return (
        p + tau * (v + tau * (a / 2.0 + tau * jerk / 6.0)),
        v + tau * (a + tau * jerk / 2.0),
        a + tau * jerk,
    )


@dataclass(frozen=True)
class Extrema:
    """Minimum and maximum of position, velocity and acceleration."""

    position: Tuple[float, float]
    velocity: Tuple[float, float]
    acceleration: Tuple[float, float]


# ==========
# OPERATIONS
# ==========

def evaluate(traj: AxisTrajectory, t: float) -> AxisState:
    """State of the trajectory at time t.

    Args:
        traj: trajectory to evaluate
        t: time in [0, total_duration]

    Returns:
        closed-form position, velocity and acceleration at t
    """
    total = traj.total_duration
    if t < -TIME_TOL or t > total + TIME_TOL or not math.isfinite(t):
        raise OutOfRangeError('t={} outside [0, {}]'.format(t, total))
    t = min(max(t, 0.0), total)
    if not traj.phases:
        return traj.start

    idx = min(bisect.bisect_right(traj._times, t) - 1, len(traj.phases) - 1)
    tau = t - traj._times[idx]
    return AxisState(*advance(traj._knots[idx], traj.phases[idx].jerk, tau))


def sample(traj: AxisTrajectory, times: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; rows are (p, v, a, j) at each time."""
    times = np.clip(np.asarray(times, dtype=float), 0.0, traj.total_duration)
    out = np.zeros((times.size, 4))
    if not traj.phases:
        out[:, :3] = traj.start.as_tuple()
        return out

    starts = np.asarray(traj._times[:-1])
    idx = np.clip(np.searchsorted(starts, times, side='right') - 1, 0, len(traj.phases) - 1)
    knots = np.asarray(traj._knots[:-1])[idx]
    jerk = np.asarray(traj.jerks)[idx]
    tau = times - starts[idx]
    p0, v0, a0 = knots[:, 0], knots[:, 1], knots[:, 2]
    out[:, 0] = p0 + tau * (v0 + tau * (a0 / 2.0 + tau * jerk / 6.0))
    out[:, 1] = v0 + tau * (a0 + tau * jerk / 2.0)
    out[:, 2] = a0 + tau * jerk
    out[:, 3] = jerk
    return out


def concatenate(first: AxisTrajectory, second: AxisTrajectory, tol: float=CONTINUITY_TOL) -> AxisTrajectory:
    """Appends second to first; the joint must be continuous within tol."""
    if not first.end_state.isclose(second.start, tol):
        raise ContinuityError('End state {} does not match start state {}'.format(first.end_state, second.start))
    return AxisTrajectory(first.start, first.phases + second.phases)


def split(traj: AxisTrajectory, t: float) -> Tuple[AxisTrajectory, AxisTrajectory]:
    """Cuts the trajectory at t into a head ending at t and a tail starting there."""
    cut_state = evaluate(traj, t)
    head, tail = [], []
    for phase, t0 in zip(traj.phases, traj._times):
        t1 = t0 + phase.duration
        if t1 <= t:
            head.append(phase)
        elif t0 >= t:
            tail.append(phase)
        else:
            head.append(JerkPhase(t - t0, phase.jerk))
            tail.append(JerkPhase(t1 - t, phase.jerk))
    return AxisTrajectory(traj.start, tuple(head)), AxisTrajectory(cut_state, tuple(tail))


def extrema(traj: AxisTrajectory) -> Extrema:
    """Exact extrema from piece endpoints and roots of each piece's derivative."""
    p_vals, v_vals, a_vals = [], [], []
    for idx, phase in enumerate(traj.phases):
        p0, v0, a0 = traj._knots[idx]
        j, d = phase.jerk, phase.duration
        candidates = [0.0, d]
        # velocity extremum where acceleration vanishes
        if j != 0 and 0 < -a0 / j < d:
            candidates.append(-a0 / j)
        # position extrema where velocity vanishes
        candidates += polyroots.real_roots_in([j / 2.0, a0, v0], 0.0, d)
        for tau in candidates:
            p, v, a = advance((p0, v0, a0), j, tau)
            p_vals.append(p)
            v_vals.append(v)
            a_vals.append(a)

    for p, v, a in (traj._knots[0], traj._knots[-1]):
        p_vals.append(p)
        v_vals.append(v)
        a_vals.append(a)

    return Extrema(
        position=(min(p_vals), max(p_vals)),
        velocity=(min(v_vals), max(v_vals)),
        acceleration=(min(a_vals), max(a_vals)),
    )


def within_limits(traj: AxisTrajectory, limits: AxisLimits, tol: float=1e-9) -> bool:
    """True if velocity, acceleration and jerk stay inside the limits (with slack tol)."""
    ext = extrema(traj)
    v_lo, v_hi = limits.v_bounds
    a_lo, a_hi = limits.a_bounds
    j_lo, j_hi = limits.j_bounds
    return (
        ext.velocity[0] >= v_lo - tol and ext.velocity[1] <= v_hi + tol
        and ext.acceleration[0] >= a_lo - tol and ext.acceleration[1] <= a_hi + tol
        and all(j_lo - tol <= ph.jerk <= j_hi + tol for ph in traj.phases)
    )
