"""Brute-force reference computations for checking the planner.

None of this is used on the planning path. The collision check and the
switching-time search evaluate trajectories with their own arithmetic so
that they do not share code with the modules they check.
"""

import logging
import math
import numpy as np
import pandas as pd
import progressbar
from dataclasses import dataclass
from scipy import optimize
from typing import Optional, Sequence, Tuple
from . import axis_planner
from .axis_planner import PartialTarget
from .axis_trajectory import AxisLimits, AxisState
from .collision import BoundPath, Obstacle
from .errors import PlannerError
from .multi_axis import MultiAxisTrajectory

log = logging.getLogger(__name__)


# ============
# SAMPLING MAP
# ============

def _velocity_axis(limits: AxisLimits, starts: Sequence[AxisState], resolution: int, span: Optional[Tuple[float, float]]) -> np.ndarray:
    if span is None:
        lo, hi = limits.v_bounds
        reach = max(1.0, 2 * max(abs(s.velocity) for s in starts))
        span = (lo if math.isfinite(lo) else -reach, hi if math.isfinite(hi) else reach)
    return np.linspace(span[0], span[1], resolution)


def grid_viastate_time_map(starts: Sequence[AxisState], via: Sequence[float], targets: Sequence[AxisState],
        limits: Sequence[AxisLimits], resolution: int=100, spans: Sequence[Optional[Tuple[float, float]]]=(None, None),
        display_progress: bool=False) -> pd.DataFrame:
    """Segment times over a grid of viastate velocities of two bound axes.

    Args:
        starts, targets: full states of both axes
        via: viastate position of both axes; viastate acceleration is zero
        limits: limits of both axes
        resolution: grid points per velocity axis
        spans: per axis velocity range, defaults to the velocity limits

    Returns:
        DataFrame with columns vx, vy, T1, T2, Ttotal; NaN marks infeasible cells
    """
    assert resolution >= 2, 'Sampling map needs at least a 2x2 grid'
    grids = [_velocity_axis(limits[k], (starts[k], targets[k]), resolution, spans[k]) for k in (0, 1)]

    # per-axis segment times are independent of the other axis
    times = []
    for k in (0, 1):
        first, second = np.full(resolution, np.nan), np.full(resolution, np.nan)
        for i, v in enumerate(grids[k]):
            via_state = AxisState(via[k], float(v), 0.0)
            try:
                first[i] = axis_planner.plan(starts[k], PartialTarget.from_state(via_state), limits[k]).total_duration
                second[i] = axis_planner.plan(via_state, PartialTarget.from_state(targets[k]), limits[k]).total_duration
            except PlannerError as err:
                log.debug('Grid cell v=%.6g on axis %d infeasible: %s', v, k, err)
        times.append((first, second))

    if display_progress:
        bar = progressbar.ProgressBar(max_value=resolution)
        bar.update(0)

    rows = []
    for i, vx in enumerate(grids[0]):
        for j, vy in enumerate(grids[1]):
            T1 = max(times[0][0][i], times[1][0][j])
            T2 = max(times[0][1][i], times[1][1][j])
            rows.append((vx, vy, T1, T2, T1 + T2))
        if display_progress:
            bar.update(1 + i)

    return pd.DataFrame(rows, columns=['vx', 'vy', 'T1', 'T2', 'Ttotal'])


# =========================
# DENSE COLLISION SAMPLING
# =========================

def _positions(phases: Sequence[Tuple[float, float]], start: Tuple[float, float, float], times: np.ndarray) -> np.ndarray:
    out = np.empty(times.size)
    p, v, a = start
    t0 = 0.0
    remaining = np.ones(times.size, dtype=bool)
    for duration, jerk in phases:
        mask = remaining & (times <= t0 + duration)
        tau = times[mask] - t0
        out[mask] = p + v * tau + a * tau ** 2 / 2 + jerk * tau ** 3 / 6
        remaining &= ~mask
        p, v, a = (p + v * duration + a * duration ** 2 / 2 + jerk * duration ** 3 / 6,
            v + a * duration + jerk * duration ** 2 / 2, a + jerk * duration)
        t0 += duration
    out[remaining] = p
    return out


def _bound_positions(path: BoundPath, times: np.ndarray) -> np.ndarray:
    starts = np.array([piece.start_time for piece in path.pieces])
    idx = np.clip(np.searchsorted(starts, times, side='right') - 1, 0, len(starts) - 1)
    tau = times - starts[idx]
    p = np.array([piece.position for piece in path.pieces])[idx]
    v = np.array([piece.velocity for piece in path.pieces])[idx]
    a = np.array([piece.acceleration for piece in path.pieces])[idx]
    j = np.array([piece.jerk for piece in path.pieces])[idx]
    return p + v * tau + a * tau ** 2 / 2 + j * tau ** 3 / 6


def dense_collision_check(traj: MultiAxisTrajectory, obstacle: Obstacle, dt: float) -> Optional[float]:
    """First sample time (step dt) at which every axis is strictly inside the inflated obstacle."""
    assert dt > 0, 'Sampling step must be positive'
    times = np.arange(0.0, traj.total_duration + dt / 2, dt)
    inside = np.ones(times.size, dtype=bool)
    for axis, lower, upper in zip(traj.axes, obstacle.lower, obstacle.upper):
        phases = [(ph.duration, ph.jerk) for ph in axis.phases]
        p = _positions(phases, axis.start.as_tuple(), times)
        inside &= (p > _bound_positions(lower, times) - obstacle.inflation) & (p < _bound_positions(upper, times) + obstacle.inflation)
    hits = np.flatnonzero(inside)
    return float(times[hits[0]]) if hits.size else None


# =====================
# SWITCHING-TIME SEARCH
# =====================

@dataclass(frozen=True)
class GridSearchResult:
    duration: float
    tolerance: float


def _feasible(start: AxisState, target: PartialTarget, limits: AxisLimits, total: float, steps: int) -> bool:
    """Whether a jerk profile, constant on each of steps equal intervals, reaches target in total seconds."""
    dt = total / steps
    p0, v0, a0 = start.as_tuple()
    k = np.arange(steps)

    m = steps - k - 1
    A_eq, b_eq = [], []
    if target.position is not None:
        A_eq.append(dt ** 3 * (1 / 6 + m / 2 + m ** 2 / 2))
        b_eq.append(target.position - (p0 + v0 * total + a0 * total ** 2 / 2))
    if target.velocity is not None:
        A_eq.append(dt ** 2 * (1 / 2 + m))
        b_eq.append(target.velocity - (v0 + a0 * total))
    if target.acceleration is not None:
        A_eq.append(np.full(steps, dt))
        b_eq.append(target.acceleration - a0)

    # velocity and acceleration limits at the grid points
    A_ub, b_ub = [], []
    v_lo, v_hi = limits.v_bounds
    a_lo, a_hi = limits.a_bounds
    for i in range(1, steps + 1):
        before = k < i
        row_a = np.where(before, dt, 0.0)
        row_v = np.where(before, dt ** 2 * (1 / 2 + (i - k - 1)), 0.0)
        t_i = i * dt
        if math.isfinite(a_hi):
            A_ub.append(row_a)
            b_ub.append(a_hi - a0)
        if math.isfinite(a_lo):
            A_ub.append(-row_a)
            b_ub.append(a0 - a_lo)
        if math.isfinite(v_hi):
            A_ub.append(row_v)
            b_ub.append(v_hi - v0 - a0 * t_i)
        if math.isfinite(v_lo):
            A_ub.append(-row_v)
            b_ub.append(v0 + a0 * t_i - v_lo)

    j_lo, j_hi = limits.j_bounds
    result = optimize.linprog(
        np.zeros(steps),
        A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
        bounds=[(j_lo, j_hi)] * steps, method='highs',
    )
    return result.status == 0


def switching_time_grid_search(start: AxisState, target: PartialTarget, limits: AxisLimits,
        steps: int=200, rel_tol: float=1e-4, max_duration: float=1e4) -> GridSearchResult:
    """Shortest duration found for jerk profiles switching on a uniform time grid.

    The duration is bisected on feasibility of a linear program over the
    per-step jerks. The reported tolerance covers the bisection width and
    limit violations between grid points.
    """
    if target.is_met_by(start):
        return GridSearchResult(0.0, 0.0)

    hi = 1.0
    while not _feasible(start, target, limits, hi, steps):
        hi *= 2
        if hi > max_duration:
            raise PlannerError('No feasible duration below {}'.format(max_duration))
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = (lo + hi) / 2
        if _feasible(start, target, limits, mid, steps):
            hi = mid
        else:
            lo = mid
    return GridSearchResult(hi, (hi - lo) + 2 * hi / steps)
