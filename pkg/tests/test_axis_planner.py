import math
import numpy as np
import pytest
from conftest import at_rest, rest
from jerk_planner_python import axis_planner
from jerk_planner_python.axis_planner import Fixed, Objective, PartialTarget, TIME_OPTIMAL
from jerk_planner_python.axis_trajectory import AxisLimits, AxisState, evaluate, within_limits
from jerk_planner_python.cli import fuzz_case
from jerk_planner_python.errors import InfeasibleDurationError, InfeasibleTargetError, InvalidStateError


def assert_reaches(traj, target, tol=1e-7):
    end = traj.end_state
    for name in axis_planner.FIELDS:
        goal = getattr(target, name)
        if goal is not None:
            assert getattr(end, name) == pytest.approx(goal, abs=tol), name


# =============
# PROBLEM TYPES
# =============

class TestProblemTypes:

    def test_target_needs_a_defined_field(self):
        with pytest.raises(InvalidStateError, match='At least one'):
            PartialTarget()

    def test_target_rejects_nan(self):
        with pytest.raises(InvalidStateError):
            PartialTarget(math.nan, 0.0)

    def test_free_fields(self):
        target = PartialTarget(1.0, None, 0.0)
        assert target.defined == (True, False, True)
        assert target.free_fields == ('velocity',)

    def test_is_met_by_ignores_free_fields(self):
        assert PartialTarget(None, 2.0).is_met_by(AxisState(7.0, 2.0, 0.5))
        assert not PartialTarget(1.0).is_met_by(AxisState(1.1, 0.0, 0.0), 1e-3)

    @pytest.mark.parametrize('total', [0.0, -1.0, math.inf])
    def test_fixed_needs_positive_duration(self, total):
        with pytest.raises(InvalidStateError):
            Fixed(total)

    def test_objective_flip(self):
        assert Objective.MAXIMIZE.flipped() is Objective.MINIMIZE

    def test_condition_sets_are_cached(self):
        first = axis_planner.condition_sets((True, True, True), (True, True), False)
        assert first
        assert axis_planner.condition_sets((True, True, True), (True, True), False) is first


# ============
# TIME-OPTIMAL
# ============

class TestTimeOptimal:

    def test_rest_to_rest_jerk_limited(self, jerk_only):
        traj = axis_planner.plan(rest(), at_rest(1.0), jerk_only)
        assert traj.total_duration == pytest.approx(32 ** (1 / 3), rel=1e-9)
        assert_reaches(traj, at_rest(1.0))
        assert within_limits(traj, jerk_only)

    def test_rest_to_rest_negative_direction(self, jerk_only):
        traj = axis_planner.plan(rest(1.0), at_rest(0.0), jerk_only)
        assert traj.total_duration == pytest.approx(32 ** (1 / 3), rel=1e-9)
        assert traj.jerks[0] < 0

    def test_rest_to_rest_with_cruise(self, unit_box):
        # ramps of 1 s each to reach 2 m/s cover 3 m, 4 m are cruised at 2 m/s
        traj = axis_planner.plan(rest(), at_rest(10.0), unit_box)
        assert traj.total_duration == pytest.approx(8.0, rel=1e-9)
        assert_reaches(traj, at_rest(10.0))
        assert within_limits(traj, unit_box)

    def test_velocity_only_target(self, unit_box):
        # the free acceleration must be zero at the velocity limit
        target = PartialTarget(None, 2.0, None)
        traj = axis_planner.plan(rest(), target, unit_box)
        assert traj.total_duration == pytest.approx(3.0, rel=1e-9)
        assert_reaches(traj, target)
        assert traj.end_state.acceleration == pytest.approx(0.0, abs=1e-9)

    def test_position_only_from_moving_start(self, quad_limits):
        from jerk_planner_python.oracle import switching_time_grid_search
        start, target = AxisState(1.1796, -0.5728, -1.1288), PartialTarget(-1.939)
        traj = axis_planner.plan(start, target, quad_limits)
        assert_reaches(traj, target)
        assert within_limits(traj, quad_limits)
        found = switching_time_grid_search(start, target, quad_limits, steps=120)
        assert abs(found.duration - traj.total_duration) <= found.tolerance

    @pytest.mark.parametrize('t', np.round(np.arange(2.1, 3.45, 0.1), 2))
    def test_replan_along_optimal_profile(self, quad_limits, t):
        optimal = axis_planner.plan(rest(), at_rest(6.0), quad_limits)
        assert optimal.total_duration == pytest.approx(4.0, rel=1e-9)
        traj = axis_planner.plan(evaluate(optimal, t), at_rest(6.0), quad_limits)
        assert traj.total_duration == pytest.approx(4.0 - t, abs=1e-6)
        assert_reaches(traj, at_rest(6.0))

    def test_acceleration_only_target(self, unit_box):
        traj = axis_planner.plan(rest(), PartialTarget(None, None, 1.0), unit_box)
        assert traj.total_duration == pytest.approx(1.0, rel=1e-9)

    def test_target_already_met(self, unit_box):
        traj = axis_planner.plan(AxisState(3.0, 1.0, 0.0), PartialTarget(None, 1.0, 0.0), unit_box)
        assert traj.total_duration == 0.0

    def test_moving_start(self, quad_limits):
        start = AxisState(0.0, 1.8, 0.5)
        traj = axis_planner.plan(start, at_rest(10.0), quad_limits)
        assert_reaches(traj, at_rest(10.0))
        assert within_limits(traj, quad_limits)

    def test_start_beyond_velocity_limit_recovers(self, unit_box):
        traj = axis_planner.plan(AxisState(0.0, 3.0, 0.0), at_rest(20.0), unit_box)
        assert_reaches(traj, at_rest(20.0))
        late = [evaluate(traj, t).velocity for t in np.linspace(traj.total_duration / 2, traj.total_duration, 20)]
        assert max(late) <= 2.0 + 1e-9

    def test_unbounded_jerk_is_rejected(self):
        with pytest.raises(InvalidStateError, match='Jerk limits'):
            axis_planner.plan(rest(), at_rest(1.0), AxisLimits.symmetric(velocity=1.0, acceleration=1.0))

    def test_target_velocity_outside_limits(self, unit_box):
        with pytest.raises(InfeasibleTargetError):
            axis_planner.plan(rest(), PartialTarget(None, 2.5), unit_box)

    def test_agrees_with_switching_time_search(self, unit_box):
        from jerk_planner_python.oracle import switching_time_grid_search
        start, target = AxisState(0.0, 0.5, 0.0), PartialTarget(2.0, 0.0, 0.0)
        traj = axis_planner.plan(start, target, unit_box)
        found = switching_time_grid_search(start, target, unit_box, steps=120)
        assert abs(found.duration - traj.total_duration) <= found.tolerance


# ==============
# FIXED DURATION
# ==============

class TestFixedDuration:

    def test_longer_duration_is_met_exactly(self, jerk_only):
        traj = axis_planner.plan(rest(), at_rest(1.0), jerk_only, Fixed(5.0))
        assert traj.total_duration == pytest.approx(5.0, abs=1e-9)
        assert_reaches(traj, at_rest(1.0))
        assert within_limits(traj, jerk_only)

    def test_duration_equal_to_optimum(self, jerk_only):
        traj = axis_planner.plan(rest(), at_rest(1.0), jerk_only, Fixed(32 ** (1 / 3)))
        assert traj.total_duration == pytest.approx(32 ** (1 / 3), abs=1e-9)

    def test_shorter_duration_is_infeasible(self, jerk_only):
        with pytest.raises(InfeasibleDurationError):
            axis_planner.plan(rest(), at_rest(1.0), jerk_only, Fixed(2.0))

    def test_stays_put(self, unit_box):
        traj = axis_planner.plan(rest(2.0), at_rest(2.0), unit_box, Fixed(1.5))
        assert traj.total_duration == pytest.approx(1.5)
        assert traj.end_state == rest(2.0)

    def test_objective_orders_free_velocity(self, unit_box):
        target = PartialTarget(4.0, None, 0.0)
        fast = axis_planner.plan(rest(), target, unit_box, Fixed(5.0, Objective.MAXIMIZE, 'velocity'))
        slow = axis_planner.plan(rest(), target, unit_box, Fixed(5.0, Objective.MINIMIZE, 'velocity'))
        assert fast.end_state.velocity >= slow.end_state.velocity - 1e-9
        for traj in (fast, slow):
            assert traj.total_duration == pytest.approx(5.0, abs=1e-9)
            assert_reaches(traj, target)

    def test_free_acceleration_ends_inside_braking_window(self, unit_box):
        traj = axis_planner.plan(rest(), PartialTarget(None, 2.0, None), unit_box, Fixed(4.0))
        end = traj.end_state
        assert end.velocity == pytest.approx(2.0, abs=1e-7)
        lo, hi = axis_planner.acceleration_bounds_for(end.velocity, unit_box)
        assert lo - 1e-6 <= end.acceleration <= hi + 1e-6

    @pytest.mark.parametrize('extra', [1e-6, 0.3, 2.0])
    def test_replanned_state_with_longer_duration(self, quad_limits, extra):
        optimal = axis_planner.plan(rest(), at_rest(6.0), quad_limits)
        start = evaluate(optimal, 2.5)
        total = optimal.total_duration - 2.5 + extra
        traj = axis_planner.plan(start, at_rest(6.0), quad_limits, Fixed(total))
        assert traj.total_duration == pytest.approx(total, abs=1e-9)
        assert_reaches(traj, at_rest(6.0))
        assert within_limits(traj, quad_limits, 1e-7)


# =======
# HELPERS
# =======

class TestHelpers:

    def test_velocity_bounds_for_acceleration(self):
        limits = AxisLimits.symmetric(velocity=4.0, acceleration=3.0, jerk=1.0)
        assert axis_planner.velocity_bounds_for(1.0, limits) == pytest.approx((-4.0, 3.5))
        assert axis_planner.velocity_bounds_for(-1.0, limits) == pytest.approx((-3.5, 4.0))

    def test_clamp_target(self):
        limits = AxisLimits.symmetric(velocity=4.0, acceleration=3.0, jerk=1.0)
        assert axis_planner.clamp_target(PartialTarget(None, 5.0, 1.0), limits) == PartialTarget(None, 4.0, 0.0)
        assert axis_planner.clamp_target(PartialTarget(None, -3.875, -2.0), limits) == PartialTarget(None, -3.875, -0.5)
        assert axis_planner.clamp_target(PartialTarget(1.0, None, 5.0), limits).acceleration == pytest.approx(2 * math.sqrt(2))

    @pytest.mark.parametrize('target', [
        PartialTarget(None, 5.0, 1.0), PartialTarget(None, -3.875, -2.0), PartialTarget(1.0, None, 5.0),
        PartialTarget(None, 3.9, -2.5), PartialTarget(2.0, -4.0, 0.1),
    ])
    def test_clamp_target_is_idempotent(self, target):
        limits = AxisLimits.symmetric(velocity=4.0, acceleration=3.0, jerk=1.0)
        once = axis_planner.clamp_target(target, limits)
        assert axis_planner.clamp_target(once, limits) == once

    def test_velocity_floor_for_braking_acceleration(self):
        limits = AxisLimits(-1.0, 4.0, -3.0, 3.0, -4.0, 4.0)
        assert axis_planner.velocity_bounds_for(-2.0, limits)[0] == pytest.approx(-0.5)

    def test_acceleration_ceiling_at_velocity(self):
        limits = AxisLimits(0.0, 4.0, -5.0, 5.0, -2.0, 2.0)
        assert axis_planner.acceleration_bounds_for(0.0, limits) == pytest.approx((0.0, 4.0))

    def test_velocity_change_clips_peak_acceleration(self, unit_box):
        phases = axis_planner._velocity_change(rest(), 2.0, 0.0, unit_box)
        assert [ph.duration for ph in phases] == pytest.approx([1.0, 1.0, 1.0])
        assert [ph.jerk for ph in phases] == [1.0, 0.0, -1.0]

    def test_velocity_change_downwards(self, jerk_only):
        # triangle: valley -1 reached after 1 s, back to zero after 2 s
        phases = axis_planner._velocity_change(rest(), -1.0, 0.0, jerk_only)
        assert [ph.duration for ph in phases] == pytest.approx([1.0, 0.0, 1.0])
        assert phases[0].jerk == -1.0

    def test_plan_reverse_ends_at_given_state(self, jerk_only):
        traj = axis_planner.plan_reverse(rest(1.0), at_rest(0.0), jerk_only)
        assert traj.total_duration == pytest.approx(32 ** (1 / 3), rel=1e-9)
        assert traj.start.isclose(rest(0.0), 1e-7)
        assert traj.end_state.isclose(rest(1.0), 1e-7)

    def test_reachable_velocity_interval(self, unit_box):
        lo, hi = axis_planner.reachable_velocity_interval(rest(), 4.0, 5.0, unit_box, end_acceleration=0.0)
        assert lo < hi
        assert -2.0 - 1e-9 <= lo and hi <= 2.0 + 1e-9


# ==========
# RANDOMIZED
# ==========

class TestRandomized:

    @pytest.mark.parametrize('case', range(40))
    def test_random_problem(self, case):
        row = fuzz_case(11, case)
        assert row['status'] != 'failed', row['message']

    @pytest.mark.slow
    def test_many_random_problems(self):
        failures = [row for row in (fuzz_case(5, case) for case in range(100_000)) if row['status'] == 'failed']
        assert not failures, failures[:5]
