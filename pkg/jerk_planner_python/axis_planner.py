"""Single-axis jerk-limited trajectory generation.

Every trajectory is an acceleration chain

    a0 -> L1 [hold] -> L2 [hold] -> L3 [hold] (-> af)

with ramps between consecutive levels at the jerk limit and optional holds
on each level. A ConditionSet fixes which levels sit on a limit, which are
free peaks and which carry a free hold; the remaining unknowns are resolved
from the end conditions (total time T, end velocity V, end position P).

T is linear in the unknowns and is eliminated directly. V is at most
quadratic and P at most cubic in the rest, so the pair is reduced to one
polynomial of degree <= 6 by a Sylvester resultant, its real roots are
taken from the companion matrix and polished with Newton steps. Targets
leaving position free, or both velocity and acceleration free, have
closed-form time-optimal profiles. A cruise-velocity search with Brent's
method is kept as the fallback for fixed durations that no condition set
solves. All valid solutions are collected and the best one is chosen.
"""

import itertools
import logging
import math
import numpy as np
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from numpy.polynomial import chebyshev
from scipy import optimize
from typing import Dict, List, Optional, Sequence, Tuple, Union
from .axis_trajectory import (
    AxisLimits, AxisState, AxisTrajectory, JerkPhase, advance, concatenate, within_limits,
)
from .errors import InfeasibleDurationError, InfeasibleTargetError, InvalidStateError, PlannerError
from .utilities import polyroots

log = logging.getLogger(__name__)

FIELDS = ('position', 'velocity', 'acceleration')
DURATION_TOL = 1e-9
LIMIT_TOL = 1e-9
END_TOL = 1e-8


# =============
# PROBLEM TYPES
# =============

@dataclass(frozen=True)
class PartialTarget:
    """Target state; None marks a field left free for the optimizer."""

    position: Optional[float] = None
    velocity: Optional[float] = None
    acceleration: Optional[float] = None

    def __post_init__(self):
        values = (self.position, self.velocity, self.acceleration)
        if all(x is None for x in values):
            raise InvalidStateError('At least one target field must be defined')
        for name, x in zip(FIELDS, values):
            if x is not None and not math.isfinite(x):
                raise InvalidStateError('Target {} must be finite, got {}'.format(name, x))

    @classmethod
    def from_state(cls, state: AxisState) -> 'PartialTarget':
        return cls(*state.as_tuple())

    @property
    def defined(self) -> Tuple[bool, bool, bool]:
        return tuple(getattr(self, name) is not None for name in FIELDS)

    @property
    def free_fields(self) -> Tuple[str, ...]:
        return tuple(name for name in FIELDS if getattr(self, name) is None)

    def reversed(self) -> 'PartialTarget':
        return PartialTarget(self.position, None if self.velocity is None else -self.velocity, self.acceleration)

    def is_met_by(self, state: AxisState, tol: float=0.0) -> bool:
        return all(
            getattr(self, name) is None or abs(getattr(self, name) - value) <= tol * max(1.0, abs(value))
            for name, value in zip(FIELDS, state.as_tuple())
        )


class Objective(Enum):
    MAXIMIZE = 'maximize'
    MINIMIZE = 'minimize'

    def flipped(self) -> 'Objective':
        return Objective.MINIMIZE if self is Objective.MAXIMIZE else Objective.MAXIMIZE


@dataclass(frozen=True)
class TimeOptimal:
    pass


@dataclass(frozen=True)
class Fixed:
    """Fixed total duration; the objective applies to one free target field."""

    total: float
    objective: Optional[Objective] = None
    field: Optional[str] = None

    def __post_init__(self):
        if not (math.isfinite(self.total) and self.total > 0):
            raise InvalidStateError('Fixed duration must be positive and finite, got {}'.format(self.total))
        if self.field is not None and self.field not in FIELDS:
            raise InvalidStateError('Unknown objective field {}'.format(self.field))


DurationSpec = Union[TimeOptimal, Fixed]
TIME_OPTIMAL = TimeOptimal()


# ==============
# CONDITION SETS
# ==============

_LEVEL_NAMES = {'max': 'amax', 'min': 'amin', 'zero': '0', 'free': 'free', 'free_hold': 'free'}


@dataclass(frozen=True)
class ConditionSet:
    """One combination of second-order conditions on the acceleration chain.

    Level kinds: 'free' (peak, no hold), 'free_hold' (free level and hold),
    'max'/'min' (acceleration limit with free hold), 'zero' (velocity
    plateau with free hold). signs holds the jerk sign of each ramp,
    including the final ramp to the target acceleration when it is defined.
    """

    levels: Tuple[str, ...]
    signs: Tuple[int, ...]
    final_defined: bool
    fixed: bool

    @property
    def unknowns(self) -> Tuple[Tuple[str, int], ...]:
        out = []
        for idx, kind in enumerate(self.levels):
            if kind in ('free', 'free_hold'):
                out.append(('level', idx))
            if kind != 'free':
                out.append(('hold', idx))
        return tuple(out)

    def conditions(self) -> Tuple[str, ...]:
        """The 21 scalar conditions (duration, jerk, acceleration) of the seven phase slots."""
        items = []
        for idx in range(len(self.levels)):
            items += [('ramp', idx), ('hold', idx)]
        if self.final_defined:
            items.append(('ramp', len(self.levels)))

        conds = []
        for n in range(1, 8):
            if n > len(items):
                conds += ['t{} := 0'.format(n), 'j{} := 0'.format(n), 'a{} := a{}'.format(n, n - 1)]
                continue
            item, idx = items[n - 1]
            if item == 'ramp':
                target = 'af' if idx == len(self.levels) else _LEVEL_NAMES[self.levels[idx]]
                conds.append('t{0} := (a{0} - a{1}) / j{0}'.format(n, n - 1))
                conds.append('j{} := {}'.format(n, 'jmax' if self.signs[idx] > 0 else 'jmin'))
                conds.append('a{} := {}'.format(n, target))
            else:
                free_hold = self.levels[idx] != 'free'
                conds.append('t{} free'.format(n) if free_hold else 't{} := 0'.format(n))
                conds.append('j{} := 0'.format(n))
                conds.append('a{} := a{}'.format(n, n - 1))
        return tuple(conds)


def _admissible(cs: ConditionSet, n_equations: int) -> bool:
    levels, signs = cs.levels, cs.signs
    m = len(levels)
    if cs.fixed and m == 3 and levels[1] != 'zero':
        return False
    for idx, kind in enumerate(levels):
        s_in = signs[idx]
        s_out = signs[idx + 1] if idx + 1 < len(signs) else None
        if kind == 'max' and (s_in < 0 or s_out == 1):
            return False
        if kind == 'min' and (s_in > 0 or s_out == -1):
            return False
        if kind == 'free' and s_out == s_in:
            return False
        if kind == 'zero' and not ((m == 3 and idx == 1) or (m <= 2 and n_equations <= 2)):
            return False
        if kind == 'free_hold' and m > 2:
            return False
        if idx > 0 and kind == levels[idx - 1] and kind in ('max', 'min', 'zero'):
            return False
    return True


@lru_cache(maxsize=None)
def condition_sets(defined: Tuple[bool, bool, bool], a_bounded: Tuple[bool, bool], fixed: bool) -> Tuple[ConditionSet, ...]:
    """All admissible condition sets for a target pattern, limit pattern and duration mode.

    Args:
        defined: which of (position, velocity, acceleration) the target defines
        a_bounded: whether (acceleration_min, acceleration_max) are bounded
        fixed: whether the total duration is pinned

    Returns:
        condition sets whose unknown count equals the number of end conditions
    """
    n_equations = int(fixed) + int(defined[1]) + int(defined[0])
    kinds = ['free', 'max', 'min'] + (['free_hold', 'zero'] if fixed else [])
    if not a_bounded[1]:
        kinds.remove('max')
    if not a_bounded[0]:
        kinds.remove('min')

    sets = []
    for m in range(4):
        for levels in itertools.product(kinds, repeat=m):
            for signs in itertools.product((1, -1), repeat=m + int(defined[2])):
                cs = ConditionSet(tuple(levels), tuple(signs), defined[2], fixed)
                if len(cs.unknowns) == n_equations and _admissible(cs, n_equations):
                    sets.append(cs)
    return tuple(sets)


# ======
# SOLVER
# ======

# Chebyshev nodes for the position-condition unknown; the resultant is of degree <= 6 in it
_NODES = np.cos(np.pi * (np.arange(7) + 0.5) / 7)
# sample points for the velocity-condition unknown, on which V is at most quadratic
_SAMPLES = np.array([-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0])
_FROM_SAMPLES = np.linalg.inv(np.vander(_SAMPLES, 4, increasing=True))
RAMP_SNAP = 1e-6
SAFETY_TOL = 1e-7


def _degree(coeffs: np.ndarray, top: int) -> int:
    """Highest power whose coefficient is not negligible at any node (coefficients lowest first)."""
    scale = np.max(np.abs(coeffs))
    for k in range(top, 0, -1):
        if np.max(np.abs(coeffs[..., k])) > 1e-9 * scale:
            return k
    return 0


def _resultant(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Sylvester resultants of two stacks of polynomials given lowest degree first."""
    m, n = f.shape[1] - 1, g.shape[1] - 1
    size = m + n
    mat = np.zeros((f.shape[0], size, size))
    for row in range(n):
        mat[:, row, row:row + m + 1] = f[:, ::-1]
    for row in range(m):
        mat[:, n + row, row:row + n + 1] = g[:, ::-1]
    return np.linalg.det(mat)


def _chebyshev_roots(values: np.ndarray, lo: float, hi: float) -> List[float]:
    """Real roots in [lo, hi] of the polynomial interpolating values at the nodes."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        return []
    coeffs = chebyshev.chebfit(_NODES, values, _NODES.size - 1)
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return []
    coeffs = chebyshev.chebtrim(coeffs, 1e-12 * scale)
    if coeffs.size < 2:
        return []
    roots = []
    for root in chebyshev.chebroots(coeffs):
        if abs(root.imag) <= 1e-6 * max(1.0, abs(root.real)) and lo <= root.real <= hi:
            roots.append(float(root.real))
    return roots


def _quadratic(coeffs: Sequence[float]) -> List[float]:
    """Real roots of c0 + c1*u + c2*u^2, or the vertex when there are none."""
    c0, c1, c2 = coeffs
    if abs(c2) <= 1e-10 * max(abs(c0), abs(c1), abs(c2)):
        return polyroots.linear_roots(c1, c0)
    return polyroots.quadratic_roots(c2, c1, c0) or [-c1 / (2 * c2)]


class _Problem:
    """One planning problem from a state inside the limits."""

    def __init__(self, start: AxisState, target: PartialTarget, limits: AxisLimits, duration: DurationSpec):
        self.start = start
        self.target = target
        self.limits = limits
        self.duration = duration
        self.p0, self.v0, self.a0 = start.as_tuple()
        self.pf, self.vf, self.af = target.position, target.velocity, target.acceleration
        self.a_lo, self.a_hi = limits.a_bounds
        self.j_lo, self.j_hi = limits.j_bounds
        self.total = duration.total if isinstance(duration, Fixed) else None
        self._set_scales()

    def _set_scales(self):
        jerk = max(self.j_hi, -self.j_lo)
        dp = abs(self.pf - self.p0) if self.pf is not None else 0.0
        dv = abs(self.vf - self.v0) if self.vf is not None else 0.0
        a_terms = [abs(self.a0), abs(self.af or 0.0), math.sqrt(jerk * dv), (jerk * jerk * dp) ** (1 / 3),
            math.sqrt(jerk * abs(self.v0)), 1e-6 * jerk]
        if self.total is not None:
            a_terms.append(jerk * self.total)
        self.a_scale = max(a_terms)

        a_refs = [self.a_scale] + [abs(x) for x in (self.a_lo, self.a_hi) if math.isfinite(x)]
        t_terms = [self.total or 0.0, 1e-9]
        for a_ref in a_refs:
            t_terms += [a_ref / jerk, dv / a_ref, math.sqrt(2 * dp / a_ref), abs(self.v0) / a_ref]
        self.t_scale = max(t_terms)
        self.p_scale = max(1.0, abs(self.p0), abs(self.pf or 0.0))
        self.v_scale = max(1.0, abs(self.v0), abs(self.vf or 0.0))

    # chain evaluation

    def _pinned(self, kind: str) -> float:
        return {'max': self.a_hi, 'min': self.a_lo, 'zero': 0.0}[kind]

    def _jerk(self, cs: ConditionSet, idx: int) -> float:
        return self.j_hi if cs.signs[idx] > 0 else self.j_lo

    def _chain(self, cs: ConditionSet, vals: Dict):
        """Total time, end position, end velocity and end acceleration (array-valued)."""
        t, p, v, a = 0.0, self.p0, self.v0, self.a0
        for idx, kind in enumerate(cs.levels):
            level = vals[('level', idx)] if kind in ('free', 'free_hold') else self._pinned(kind)
            j = self._jerk(cs, idx)
            d = (level - a) / j
            p, v, a = p + d * (v + d * (a / 2.0 + d * j / 6.0)), v + d * (a + d * j / 2.0), level
            t = t + d
            if kind != 'free':
                h = vals[('hold', idx)]
                p, v = p + h * (v + h * level / 2.0), v + level * h
                t = t + h
        if cs.final_defined:
            j = self._jerk(cs, -1)
            d = (self.af - a) / j
            p, v, a = p + d * (v + d * (a / 2.0 + d * j / 6.0)), v + d * (a + d * j / 2.0), self.af
            t = t + d
        return t, p, v, a

    def _scale(self, key) -> float:
        return self.a_scale if key[0] == 'level' else self.t_scale

    def _domain(self, key) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """Interval the unknown is sampled on and the wider interval its roots are kept in."""
        if key[0] == 'level':
            s = self.a_scale
            return (max(self.a_lo, -3 * s), min(self.a_hi, 3 * s)), (max(self.a_lo, -12 * s), min(self.a_hi, 12 * s))
        if self.total is not None:
            return (0.0, self.total), (0.0, self.total)
        return (0.0, 3 * self.t_scale), (0.0, 12 * self.t_scale)

    # elimination

    def _roles(self, cs: ConditionSet):
        unknowns = list(cs.unknowns)
        z = y = x = None
        if cs.fixed:
            holds = [k for k in unknowns if k[0] == 'hold']
            zero_holds = [k for k in holds if cs.levels[k[1]] == 'zero']
            z = (zero_holds or holds or unknowns)[0]
            unknowns.remove(z)
        if self.vf is not None:
            levels = [k for k in unknowns if k[0] == 'level']
            y = (levels or unknowns)[0]
            unknowns.remove(y)
        if self.pf is not None:
            x = unknowns.pop(0)
        assert not unknowns, 'Unknown count does not match the end conditions'
        return z, y, x

    def _time_slope(self, cs: ConditionSet, z) -> float:
        """Derivative of the total time with respect to the unknown z."""
        if z[0] == 'hold':
            return 1.0
        idx = z[1]
        slope = 1.0 / self._jerk(cs, idx)
        if idx + 1 < len(cs.signs):
            slope -= 1.0 / self._jerk(cs, idx + 1)
        return slope

    def _complete(self, cs: ConditionSet, vals: Dict, z) -> Dict:
        """Adds the unknown z that makes the total time equal the fixed duration."""
        if z is None:
            return dict(vals)
        slope = self._time_slope(cs, z)
        if slope == 0:
            return {**vals, z: math.nan}
        elapsed = self._chain(cs, {**vals, z: 0.0})[0]
        return {**vals, z: (self.total - elapsed) / slope}

    def _residuals(self, cs: ConditionSet, vals: Dict, z) -> Tuple[Dict, np.ndarray]:
        vals = self._complete(cs, vals, z)
        _, p, v, _ = self._chain(cs, vals)
        res = []
        if self.vf is not None:
            res.append((v - self.vf) / self.v_scale)
        if self.pf is not None:
            res.append((p - self.pf) / self.p_scale)
        return vals, np.array(res, dtype=float)

    def _polish(self, cs: ConditionSet, guess: Dict, z, keys: Tuple) -> Optional[Dict]:
        """Newton steps on the scaled end-condition residuals; a step is kept only if it helps."""
        point = np.array([guess[k] for k in keys], dtype=float)
        vals, res = self._residuals(cs, dict(zip(keys, point)), z)
        if not np.all(np.isfinite(res)):
            return None
        steps = np.array([1e-7 * self._scale(k) for k in keys])
        for _ in range(4):
            norm = np.max(np.abs(res))
            if norm <= 1e-15:
                break
            jac = np.empty((res.size, len(keys)))
            for i in range(len(keys)):
                shifted = point.copy()
                shifted[i] += steps[i]
                jac[:, i] = (self._residuals(cs, dict(zip(keys, shifted)), z)[1] - res) / steps[i]
            if not np.all(np.isfinite(jac)):
                break
            # least squares handles the singular Jacobian of degenerate (zero-length) ramps
            trial = point - np.linalg.lstsq(jac, res, rcond=1e-10)[0]
            trial_vals, trial_res = self._residuals(cs, dict(zip(keys, trial)), z)
            if not np.all(np.isfinite(trial_res)) or np.max(np.abs(trial_res)) >= norm:
                break
            point, vals, res = trial, trial_vals, trial_res
        return vals

    def _solve_velocity(self, cs: ConditionSet, y, z) -> List[Optional[Dict]]:
        s = self._scale(y)
        _, _, v, _ = self._chain(cs, self._complete(cs, {y: s * _SAMPLES}, z))
        coeffs = _FROM_SAMPLES @ np.broadcast_to(v - self.vf, _SAMPLES.shape)
        return [self._polish(cs, {y: s * u}, z, (y,)) for u in _quadratic(coeffs[:3])]

    def _solve_position(self, cs: ConditionSet, x, z) -> List[Optional[Dict]]:
        (lo, hi), (keep_lo, keep_hi) = self._domain(x)
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        if not half > 0:
            return []
        _, p, _, _ = self._chain(cs, self._complete(cs, {x: mid + half * _NODES}, z))
        roots = _chebyshev_roots(np.broadcast_to(p - self.pf, _NODES.shape),
            (keep_lo - mid) / half - 1e-9, (keep_hi - mid) / half + 1e-9)
        return [self._polish(cs, {x: mid + half * u}, z, (x,)) for u in roots]

    def _solve_pair(self, cs: ConditionSet, y, x, z) -> List[Optional[Dict]]:
        """Eliminates y with the resultant of the velocity and position conditions."""
        (lo, hi), (keep_lo, keep_hi) = self._domain(x)
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        if not half > 0:
            return []
        s = self._scale(y)
        grid = {x: (mid + half * _NODES)[:, None], y: s * _SAMPLES[None, :]}
        _, p, v, _ = self._chain(cs, self._complete(cs, grid, z))
        shape = (_NODES.size, _SAMPLES.size)
        f = np.broadcast_to(v - self.vf, shape) @ _FROM_SAMPLES.T
        g = np.broadcast_to(p - self.pf, shape) @ _FROM_SAMPLES.T
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            return []
        m, n = _degree(f[:, :3], 2), _degree(g, 3)
        if m == 0 or n == 0:
            return []
        values = _resultant(f[:, :m + 1], g[:, :n + 1])

        out = []
        for u in _chebyshev_roots(values, (keep_lo - mid) / half - 1e-9, (keep_hi - mid) / half + 1e-9):
            xv = mid + half * u
            _, _, v1, _ = self._chain(cs, self._complete(cs, {x: xv, y: s * _SAMPLES}, z))
            coeffs = _FROM_SAMPLES @ np.broadcast_to(v1 - self.vf, _SAMPLES.shape)
            for w in _quadratic(coeffs[:3]):
                out.append(self._polish(cs, {y: s * w, x: xv}, z, (y, x)))
        return out

    def solve(self, cs: ConditionSet) -> List[Dict]:
        """Scalar solutions (unknown -> value) of one condition set."""
        z, y, x = self._roles(cs)
        with np.errstate(all='ignore'):
            if x is None and y is None:
                solutions = [self._complete(cs, {}, z)]
            elif x is None:
                solutions = self._solve_velocity(cs, y, z)
            elif y is None:
                solutions = self._solve_position(cs, x, z)
            else:
                solutions = self._solve_pair(cs, y, x, z)
        out = []
        for sol in solutions:
            if sol is None:
                continue
            sol = {k: float(value) for k, value in sol.items()}
            if all(math.isfinite(value) for value in sol.values()):
                out.append(sol)
        return out

    # trajectories

    def build(self, cs: ConditionSet, sol: Dict) -> Optional[AxisTrajectory]:
        phases = []
        a = self.a0
        ramps = [(sol.get(('level', idx)) if kind in ('free', 'free_hold') else self._pinned(kind), sol.get(('hold', idx), 0.0))
            for idx, kind in enumerate(cs.levels)]
        if cs.final_defined:
            ramps.append((self.af, 0.0))
        snap = RAMP_SNAP * self.t_scale
        for idx, (level, hold) in enumerate(ramps):
            j = self._jerk(cs, idx)
            d = (level - a) / j
            if d < -snap or hold < -snap:
                return None
            phases.append(JerkPhase(max(d, 0.0), j))
            if hold > 0:
                phases.append(JerkPhase(hold, 0.0))
            a = level
        return AxisTrajectory(self.start, tuple(phases))

    def accept(self, traj: Optional[AxisTrajectory]) -> Optional[AxisTrajectory]:
        """Returns the trajectory if it meets the target, the duration and the limits."""
        if traj is None:
            return None
        if self.total is not None:
            traj = _match_total(traj, self.total)
            if traj is None:
                return None
        end = traj.end_state
        for value, goal, scale in zip(end.as_tuple(), (self.pf, self.vf, self.af), (self.p_scale, self.v_scale, 1.0)):
            if goal is not None and abs(value - goal) > END_TOL * max(scale, abs(goal)):
                return None
        if not within_limits(traj, self.limits, LIMIT_TOL):
            return None
        if self.vf is None or self.af is None:
            # a free end must still be able to brake inside the velocity limits
            lo, hi = velocity_bounds_for(end.acceleration, self.limits)
            slack = SAFETY_TOL * self.v_scale
            if not lo - slack <= end.velocity <= hi + slack:
                return None
        return traj

    def candidates(self) -> List[AxisTrajectory]:
        if self.total is None:
            closed = self._closed_form()
            if closed:
                return closed
        out = self._set_candidates()
        for target in self._boundary_targets():
            sub = _Problem(self.start, target, self.limits, self.duration)
            out += [traj for traj in map(self.accept, sub._set_candidates()) if traj is not None]
        if self.total is None and self.pf is not None:
            out += self._plateau_candidates()
        return out

    def _set_candidates(self) -> List[AxisTrajectory]:
        sets = condition_sets(self.target.defined,
            (math.isfinite(self.a_lo), math.isfinite(self.a_hi)), self.total is not None)
        out = []
        for cs in sets:
            for sol in self.solve(cs):
                traj = self.accept(self.build(cs, sol))
                if traj is not None:
                    out.append(traj)
        return out

    def _boundary_targets(self) -> List[PartialTarget]:
        """Targets pinning free fields to the edge of the safe end-state window."""
        if self.vf is not None and self.af is None:
            targets = [PartialTarget(self.pf, self.vf, a) for a in acceleration_bounds_for(self.vf, self.limits)]
        elif self.af is not None and self.vf is None:
            targets = [PartialTarget(self.pf, v, self.af) for v in velocity_bounds_for(self.af, self.limits)]
        elif self.vf is None and self.af is None:
            targets = [PartialTarget(self.pf, v, 0.0) for v in self.limits.v_bounds]
        else:
            return []
        return [t for t in targets if math.isfinite(t.velocity) and math.isfinite(t.acceleration)]

    def _closed_form(self) -> Optional[List[AxisTrajectory]]:
        """Time-optimal profiles of the targets that leave position or both velocity and acceleration out."""
        defined = self.target.defined
        try:
            if defined == (True, False, False):
                upward = self.pf > self.p0
                phases = _first_crossing(self.start, _envelope(self.start, self.limits, upward), 0, self.pf)
            elif defined == (False, True, False):
                upward = self.vf > self.v0
                phases = _first_crossing(self.start, _envelope(self.start, self.limits, upward), 1, self.vf)
            elif defined == (False, False, True):
                phases = _acceleration_change(self.start, self.af, self.limits)
            elif defined == (False, True, True):
                phases = _velocity_change(self.start, self.vf, self.af, self.limits)
            else:
                return None
        except InfeasibleTargetError:
            return []
        if phases is None:
            return []
        traj = self.accept(AxisTrajectory(self.start, tuple(phases)))
        return [traj] if traj is not None else []

    def _plateau_candidates(self) -> List[AxisTrajectory]:
        """Time-optimal profiles cruising at a velocity limit."""
        out = []
        for v_lim in self.limits.v_bounds:
            if not math.isfinite(v_lim) or v_lim == 0:
                continue
            cruise_state = AxisState(0.0, v_lim, 0.0)
            try:
                first = AxisTrajectory(self.start, _velocity_change(self.start, v_lim, 0.0, self.limits))
                if self.vf is None and self.af is None:
                    second = AxisTrajectory(cruise_state)
                else:
                    second = _plan_from(cruise_state, PartialTarget(None, self.vf, self.af), self.limits, TIME_OPTIMAL)
            except (InfeasibleTargetError, InfeasibleDurationError):
                continue
            cruise = (self.pf - first.end_state.position - second.end_state.position) / v_lim
            if cruise < -DURATION_TOL:
                continue
            phases = first.phases + (JerkPhase(max(cruise, 0.0), 0.0),) + second.phases
            traj = self.accept(AxisTrajectory(self.start, phases))
            if traj is not None:
                out.append(traj)
        return out

    def cruise_candidates(self) -> List[AxisTrajectory]:
        """Fixed-duration fallback: fastest change to a cruise velocity, cruise, fastest change to the target.

        The cruise velocity is bracketed on a grid and refined with Brent's
        method; only used when no condition set yields a valid profile.
        """
        if self.pf is None or self.total is None:
            return []
        tail = PartialTarget(None, self.vf, self.af) if self.vf is not None or self.af is not None else None

        def pieces(vc):
            first = AxisTrajectory(self.start, _velocity_change(self.start, vc, 0.0, self.limits))
            cruise_state = AxisState(0.0, vc, 0.0)
            second = _plan_from(cruise_state, tail, self.limits, TIME_OPTIMAL) if tail else AxisTrajectory(cruise_state)
            return first, second, self.total - first.total_duration - second.total_duration

        def residual(vc):
            try:
                first, second, cruise = pieces(vc)
            except PlannerError:
                return math.nan, math.nan
            return cruise, first.end_state.position + vc * cruise + second.end_state.position - self.pf

        reach = self.v_scale + self.a_scale * self.t_scale
        v_lo, v_hi = self.limits.v_bounds
        grid = np.linspace(max(v_lo, -reach), min(v_hi, reach), 65)
        values = [residual(vc) for vc in grid]
        out = []
        for i in range(grid.size - 1):
            (c0, r0), (c1, r1) = values[i], values[i + 1]
            if not (c0 >= 0 and c1 >= 0 and r0 * r1 <= 0):
                continue
            try:
                vc = optimize.brentq(lambda u: residual(u)[1], grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16)
                first, second, cruise = pieces(vc)
            except (ValueError, RuntimeError, PlannerError):
                continue
            if cruise < -DURATION_TOL:
                continue
            phases = first.phases + (JerkPhase(max(cruise, 0.0), 0.0),) + second.phases
            traj = self.accept(AxisTrajectory(self.start, phases))
            if traj is not None:
                out.append(traj)
        return out


# ============
# CLOSED FORMS
# ============

def _velocity_change(start: AxisState, velocity: float, acceleration: float, limits: AxisLimits) -> Tuple[JerkPhase, ...]:
    """Fastest change to (velocity, acceleration), ignoring position and the velocity limits.

    Ramp to a peak (or valley) acceleration and straight back down to the
    target acceleration, with a hold when the peak is clipped by its limit.
    """
    v0, a0 = start.velocity, start.acceleration
    a_lo, a_hi = limits.a_bounds
    j_lo, j_hi = limits.j_bounds
    up, down = 1.0 / (2 * j_hi), 1.0 / (2 * j_lo)
    k = up - down
    dv = velocity - v0
    direct = (acceleration * acceleration - a0 * a0) / (2 * (j_hi if acceleration >= a0 else j_lo))

    if dv >= direct:
        # dv = k*peak^2 + base
        base = -a0 * a0 * up + acceleration * acceleration * down
        peak = max(math.sqrt(max((dv - base) / k, 0.0)), a0, acceleration)
        first, second, limit = j_hi, j_lo, a_hi
        hold = 0.0
        if peak > a_hi:
            if a_hi <= 0:
                raise InfeasibleTargetError('Velocity {} needs positive acceleration above {}'.format(velocity, a_hi))
            hold = max((dv - base - k * a_hi * a_hi) / a_hi, 0.0)
            peak = a_hi
    else:
        # dv = -k*peak^2 + base
        base = -a0 * a0 * down + acceleration * acceleration * up
        peak = min(-math.sqrt(max((base - dv) / k, 0.0)), a0, acceleration)
        first, second, limit = j_lo, j_hi, a_lo
        hold = 0.0
        if peak < a_lo:
            if a_lo >= 0:
                raise InfeasibleTargetError('Velocity {} needs negative acceleration below {}'.format(velocity, a_lo))
            hold = max((dv - base + k * a_lo * a_lo) / a_lo, 0.0)
            peak = a_lo
    return (
        JerkPhase(max((peak - a0) / first, 0.0), first),
        JerkPhase(hold, 0.0),
        JerkPhase(max((acceleration - peak) / second, 0.0), second),
    )


def _acceleration_change(start: AxisState, acceleration: float, limits: AxisLimits) -> Tuple[JerkPhase, ...]:
    """Fastest change to an acceleration whose end velocity can still be braked inside the limits."""
    a0 = start.acceleration
    jerk = limits.j_bounds[1] if acceleration >= a0 else limits.j_bounds[0]
    direct = start.velocity + (acceleration * acceleration - a0 * a0) / (2 * jerk)
    lo, hi = velocity_bounds_for(acceleration, limits)
    if lo > hi:
        raise InfeasibleTargetError('Acceleration {} cannot be braked inside the velocity limits'.format(acceleration))
    if lo <= direct <= hi:
        return (JerkPhase((acceleration - a0) / jerk, jerk),)
    return _velocity_change(start, min(max(direct, lo), hi), acceleration, limits)


def _envelope(start: AxisState, limits: AxisLimits, upward: bool) -> List[Tuple[float, float]]:
    """Fastest velocity rise (or fall) as (duration, jerk) pairs; the last pair is open-ended."""
    idx = 1 if upward else 0
    v_lim, a_lim, jerk = limits.v_bounds[idx], limits.a_bounds[idx], limits.j_bounds[idx]
    if math.isfinite(v_lim):
        phases = _velocity_change(start, v_lim, 0.0, limits)
        return [(ph.duration, ph.jerk) for ph in phases] + [(math.inf, 0.0)]
    if math.isfinite(a_lim):
        return [(max((a_lim - start.acceleration) / jerk, 0.0), jerk), (math.inf, 0.0)]
    return [(math.inf, jerk)]


def _first_crossing(start: AxisState, phases: List[Tuple[float, float]], index: int, goal: float) -> Optional[List[JerkPhase]]:
    """Phases up to the first time position (index 0) or velocity (index 1) reaches goal."""
    state = start.as_tuple()
    tol = 1e-12 * max(1.0, abs(goal))
    out = []
    for duration, jerk in phases:
        p, v, a = state
        if abs(state[index] - goal) <= tol:
            return out
        coeffs = [jerk / 6.0, a / 2.0, v, p - goal] if index == 0 else [jerk / 2.0, a, v - goal]
        if math.isfinite(duration):
            roots = polyroots.real_roots_in(coeffs, 0.0, duration)
        elif index == 0:
            roots = [r for r in polyroots.cubic_roots(*coeffs) if r >= 0]
        else:
            roots = [r for r in polyroots.quadratic_roots(*coeffs) if r >= 0]
        if roots:
            out.append(JerkPhase(min(roots), jerk))
            return out
        if not math.isfinite(duration):
            return None
        out.append(JerkPhase(duration, jerk))
        state = advance(state, jerk, duration)
    return None


def _match_total(traj: AxisTrajectory, total: float) -> Optional[AxisTrajectory]:
    """Absorbs round-off in the total duration into the longest zero-jerk phase."""
    error = total - traj.total_duration
    if abs(error) <= DURATION_TOL * max(1.0, total):
        return traj
    if abs(error) > 1e-7 * max(1.0, total):
        return None
    phases = list(traj.phases)
    holds = [i for i, ph in enumerate(phases) if ph.jerk == 0]
    idx = max(holds or range(len(phases)), key=lambda i: phases[i].duration)
    if phases[idx].duration + error < 0:
        return None
    phases[idx] = JerkPhase(phases[idx].duration + error, phases[idx].jerk)
    return AxisTrajectory(traj.start, tuple(phases))


# =========
# SELECTION
# =========

def _sign_key(traj: AxisTrajectory) -> Tuple[int, ...]:
    return tuple(int(np.sign(j)) for j in traj.jerks)


def _peak_acceleration(traj: AxisTrajectory) -> float:
    return max(abs(traj.start.acceleration), max((abs(traj.knot(i).acceleration) for i in range(len(traj.phases) + 1)), default=0.0))


def objective_field(target: PartialTarget, duration: Fixed) -> Optional[str]:
    """Free field the objective of a fixed-duration plan applies to."""
    free = target.free_fields
    if duration.field is not None:
        return duration.field if duration.field in free else None
    for name in ('velocity', 'position', 'acceleration'):
        if name in free:
            return name
    return None


def _select(candidates: List[AxisTrajectory], target: PartialTarget, duration: DurationSpec) -> AxisTrajectory:
    if isinstance(duration, TimeOptimal):
        best = min(traj.total_duration for traj in candidates)
        tied = [traj for traj in candidates if traj.total_duration <= best + DURATION_TOL]
        return min(tied, key=lambda traj: (_sign_key(traj), traj.total_duration))

    name = objective_field(target, duration)
    if duration.objective is not None and name is not None:
        idx = FIELDS.index(name)
        sign = -1.0 if duration.objective is Objective.MAXIMIZE else 1.0
        values = [sign * traj.end_state.as_tuple()[idx] for traj in candidates]
        best = min(values)
        tied = [traj for traj, value in zip(candidates, values) if value <= best + 1e-9 * max(1.0, abs(best))]
        return min(tied, key=_sign_key)

    peaks = [_peak_acceleration(traj) for traj in candidates]
    best = min(peaks)
    tied = [traj for traj, peak in zip(candidates, peaks) if peak <= best + 1e-9 * max(1.0, best)]
    return min(tied, key=_sign_key)


# ==========
# VALIDATION
# ==========

def _check_inputs(start: AxisState, target: PartialTarget, limits: AxisLimits, duration: DurationSpec):
    if limits.jerk_min is None or limits.jerk_max is None:
        raise InvalidStateError('Jerk limits must be bounded')
    v_lo, v_hi = limits.v_bounds
    a_lo, a_hi = limits.a_bounds
    if not (v_lo <= 0 <= v_hi and a_lo <= 0 <= a_hi):
        raise InvalidStateError('Velocity and acceleration limits must contain zero')
    if target.velocity is not None and not v_lo - LIMIT_TOL <= target.velocity <= v_hi + LIMIT_TOL:
        raise InfeasibleTargetError('Target velocity {} outside [{}, {}]'.format(target.velocity, v_lo, v_hi))
    if target.acceleration is not None and not a_lo - LIMIT_TOL <= target.acceleration <= a_hi + LIMIT_TOL:
        raise InfeasibleTargetError('Target acceleration {} outside [{}, {}]'.format(target.acceleration, a_lo, a_hi))
    assert isinstance(duration, (TimeOptimal, Fixed)), 'Unrecognized duration spec'


def _recovery_prefix(start: AxisState, limits: AxisLimits) -> AxisTrajectory:
    """Drives a start state that violates (or must violate) its limits back inside at maximal jerk."""
    v_lo, v_hi = limits.v_bounds
    a_lo, a_hi = limits.a_bounds
    j_lo, j_hi = limits.j_bounds
    prefix = AxisTrajectory(start)

    # acceleration outside its bounds
    a = start.acceleration
    if a > a_hi:
        prefix = AxisTrajectory(start, (JerkPhase((a - a_hi) / -j_lo, j_lo),))
    elif a < a_lo:
        prefix = AxisTrajectory(start, (JerkPhase((a_lo - a) / j_hi, j_hi),))

    # velocity outside its bounds, or bound to overshoot while braking the acceleration
    state = prefix.end_state
    v, a = state.velocity, state.acceleration
    v_peak = v + a * a / (2 * -j_lo) if a > 0 else v
    v_valley = v - a * a / (2 * j_hi) if a < 0 else v
    v_goal = None
    if v_peak > v_hi + LIMIT_TOL:
        v_goal = v_hi
    elif v_valley < v_lo - LIMIT_TOL:
        v_goal = v_lo
    if v_goal is not None:
        log.debug('Recovering start state %s towards velocity %s', start, v_goal)
        change = _plan_from(state, PartialTarget(None, v_goal, 0.0), limits.without_velocity(), TIME_OPTIMAL)
        prefix = concatenate(prefix, change)
    return prefix


def _stays_put(start: AxisState, target: PartialTarget, duration: Fixed) -> bool:
    if start.acceleration != 0 or (duration.objective is not None and objective_field(target, duration) is not None):
        return False
    if target.position is not None and not (start.velocity == 0 and target.position == start.position):
        return False
    if target.velocity is not None and target.velocity != start.velocity:
        return False
    return target.acceleration is None or target.acceleration == 0


def _plan_from(start: AxisState, target: PartialTarget, limits: AxisLimits, duration: DurationSpec) -> AxisTrajectory:
    if isinstance(duration, TimeOptimal) and target.is_met_by(start, 1e-12):
        return AxisTrajectory(start)
    if isinstance(duration, Fixed) and _stays_put(start, target, duration):
        return AxisTrajectory(start, (JerkPhase(duration.total, 0.0),))

    problem = _Problem(start, target, limits, duration)
    candidates = problem.candidates()
    if candidates:
        return _select(candidates, target, duration)

    if isinstance(duration, TimeOptimal):
        raise InfeasibleTargetError('No trajectory from {} reaches {}'.format(start, target))
    optimal = _plan_from(start, target, limits, TIME_OPTIMAL)
    if optimal.total_duration > duration.total + DURATION_TOL:
        raise InfeasibleDurationError('Duration {} is shorter than the time-optimal {}'.format(
            duration.total, optimal.total_duration))
    if abs(optimal.total_duration - duration.total) <= DURATION_TOL:
        return optimal
    log.debug('No condition set solves %s in %s s, trying cruise profiles', target, duration.total)
    candidates = problem.cruise_candidates()
    if candidates:
        return _select(candidates, target, duration)
    raise InfeasibleDurationError('No trajectory of duration {} from {} reaches {}'.format(duration.total, start, target))


# ==========
# OPERATIONS
# ==========

def plan(start: AxisState, target: PartialTarget, limits: AxisLimits, duration: DurationSpec=TIME_OPTIMAL) -> AxisTrajectory:
    """Plans one axis from start to a (partially defined) target.

    Args:
        start: current state of the axis
        target: target state, free fields left to the optimizer
        limits: axis limits; jerk must be bounded
        duration: TIME_OPTIMAL or Fixed(total, objective, field)

    Returns:
        trajectory starting at start and meeting every defined target field
    """
    _check_inputs(start, target, limits, duration)
    prefix = _recovery_prefix(start, limits)
    if isinstance(duration, Fixed) and prefix.phases:
        remaining = duration.total - prefix.total_duration
        if remaining <= DURATION_TOL:
            raise InfeasibleDurationError('Duration {} is shorter than the recovery from {}'.format(duration.total, start))
        duration = Fixed(remaining, duration.objective, duration.field)

    main = _plan_from(prefix.end_state, target, limits, duration)
    return concatenate(prefix, main) if prefix.phases else main


def velocity_bounds_for(acceleration: float, limits: AxisLimits) -> Tuple[float, float]:
    """Velocities from which acceleration can be braked to zero without leaving the velocity limits."""
    v_lo, v_hi = limits.v_bounds
    j_lo, j_hi = limits.j_bounds
    if acceleration < 0:
        v_lo = v_lo + acceleration * acceleration / (2 * j_hi)
    elif acceleration > 0:
        v_hi = v_hi - acceleration * acceleration / (2 * -j_lo)
    return v_lo, v_hi


def acceleration_bounds_for(velocity: float, limits: AxisLimits) -> Tuple[float, float]:
    """Accelerations that can be braked to zero before velocity leaves its limits."""
    v_lo, v_hi = limits.v_bounds
    j_lo, j_hi = limits.j_bounds
    a_lo, a_hi = limits.a_bounds
    return (
        max(a_lo, -math.sqrt(2 * j_hi * max(velocity - v_lo, 0.0))),
        min(a_hi, math.sqrt(2 * -j_lo * max(v_hi - velocity, 0.0))),
    )


def clamp_target(target: PartialTarget, limits: AxisLimits) -> PartialTarget:
    """Clamps defined fields so that the target can be reached and left inside the velocity limits.

    With velocity defined, |a| is bounded by the jerk-limited distance to both
    velocity limits; with velocity free, by the widest window any velocity offers.
    """
    v, a = target.velocity, target.acceleration
    v_lo, v_hi = limits.v_bounds
    j_lo, j_hi = limits.j_bounds
    if v is not None:
        v = min(max(v, v_lo), v_hi)
    if a is not None:
        a_lo, a_hi = limits.a_bounds
        if v is not None:
            reach = min(math.sqrt(2 * j_hi * (v - v_lo)), math.sqrt(2 * -j_lo * (v_hi - v)))
        else:
            reach = math.sqrt((v_hi - v_lo) / (1 / (2 * j_hi) - 1 / (2 * j_lo)))
        a = min(max(a, a_lo, -reach), a_hi, reach)
    return PartialTarget(target.position, v, a)


def plan_reverse(end: AxisState, target_at_start: PartialTarget, limits: AxisLimits, duration: DurationSpec=TIME_OPTIMAL) -> AxisTrajectory:
    """Plans backwards in time from end; the returned trajectory ends at end."""
    if isinstance(duration, Fixed) and duration.objective is not None:
        if objective_field(target_at_start, duration) == 'velocity':
            duration = Fixed(duration.total, duration.objective.flipped(), duration.field)
    backwards = plan(end.reversed(), target_at_start.reversed(), limits.reversed(), duration)
    return backwards.mirrored()


def reachable_velocity_interval(start: AxisState, end_position: float, total: float, limits: AxisLimits,
        end_acceleration: Optional[float]=None, reverse: bool=False) -> Tuple[float, float]:
    """Extremal velocities at end_position after exactly total seconds.

    With reverse=True, start is the state the segment ends in and the
    interval is that of the velocity at end_position at the segment start.
    """
    target = PartialTarget(end_position, None, end_acceleration)
    values = []
    for objective in (Objective.MINIMIZE, Objective.MAXIMIZE):
        duration = Fixed(total, objective, 'velocity')
        if reverse:
            values.append(plan_reverse(start, target, limits, duration).start.velocity)
        else:
            values.append(plan(start, target, limits, duration).end_state.velocity)
    return min(values), max(values)
