import pytest
from hypothesis import assume, given, settings, strategies as st
from jerk_planner_python import axis_planner, cli
from jerk_planner_python.axis_planner import Fixed, PartialTarget
from jerk_planner_python.axis_trajectory import AxisLimits, AxisState, evaluate
from jerk_planner_python.utilities import polyroots

LIMITS = AxisLimits.symmetric(velocity=3.0, acceleration=2.0, jerk=4.0)


def finite(lo, hi):
    return st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)


# =======
# TARGETS
# =======

class TestClampProperties:

    @given(finite(-10, 10), finite(-10, 10))
    @settings(max_examples=500)
    def test_clamp_is_idempotent(self, velocity, acceleration):
        once = axis_planner.clamp_target(PartialTarget(None, velocity, acceleration), LIMITS)
        assert axis_planner.clamp_target(once, LIMITS) == once

    @given(finite(-10, 10), finite(-10, 10))
    @settings(max_examples=500)
    def test_clamped_state_can_brake(self, velocity, acceleration):
        clamped = axis_planner.clamp_target(PartialTarget(0.0, velocity, acceleration), LIMITS)
        lo, hi = axis_planner.acceleration_bounds_for(clamped.velocity, LIMITS)
        assert lo - 1e-9 <= clamped.acceleration <= hi + 1e-9
        assert -3.0 - 1e-9 <= clamped.velocity <= 3.0 + 1e-9

    @given(finite(-10, 10))
    @settings(max_examples=300)
    def test_free_velocity_limits_acceleration(self, acceleration):
        clamped = axis_planner.clamp_target(PartialTarget(1.0, None, acceleration), LIMITS)
        assert clamped.velocity is None
        assert abs(clamped.acceleration) <= 2.0 + 1e-9


# =====
# ROOTS
# =====

class TestRootProperties:

    @given(finite(-5, 5), finite(-5, 5), finite(-5, 5))
    @settings(max_examples=1000)
    def test_cubic_recovers_separated_roots(self, r1, r2, r3):
        roots = sorted((r1, r2, r3))
        assume(roots[1] - roots[0] > 1e-2 and roots[2] - roots[1] > 1e-2)
        b = -(r1 + r2 + r3)
        c = r1 * r2 + r1 * r3 + r2 * r3
        d = -r1 * r2 * r3
        found = polyroots.cubic_roots(1.0, b, c, d)
        assert found == pytest.approx(roots, abs=1e-6)

    @given(finite(-3, 3), finite(-3, 3), finite(0.1, 4))
    @settings(max_examples=500)
    def test_roots_in_interval_vanish(self, a, b, span):
        for x in polyroots.real_roots_in([1.0, a, b, -1.0], -span, span):
            assert -span <= x <= span
            assert abs(((x + a) * x + b) * x - 1.0) <= 1e-8 * max(1.0, abs(x) ** 3)


# ========
# PLANNING
# ========

class TestPlanProperties:

    @given(finite(-5, 5), finite(-2, 2), finite(-1, 1), finite(-10, 10))
    @settings(max_examples=200, deadline=None)
    def test_time_optimal_reaches_rest(self, p0, v0, a0, goal):
        target = PartialTarget(goal, 0.0, 0.0)
        traj = axis_planner.plan(AxisState(p0, v0, a0), target, LIMITS)
        assert cli.check_trajectory(traj, target, LIMITS) is None

    @given(finite(-5, 5), finite(-2, 2), finite(-1, 1), finite(-10, 10), finite(0, 3))
    @settings(max_examples=200, deadline=None)
    def test_longer_duration_still_reaches(self, p0, v0, a0, goal, extra):
        start, target = AxisState(p0, v0, a0), PartialTarget(goal, 0.0, 0.0)
        total = axis_planner.plan(start, target, LIMITS).total_duration + extra
        traj = axis_planner.plan(start, target, LIMITS, Fixed(total))
        assert cli.check_trajectory(traj, target, LIMITS, total) is None

    @given(finite(-2, 2), finite(-1, 1), finite(-2.5, 2.5))
    @settings(max_examples=200, deadline=None)
    def test_velocity_target_from_any_state(self, v0, a0, goal):
        target = PartialTarget(None, goal, None)
        traj = axis_planner.plan(AxisState(0.0, v0, a0), target, LIMITS)
        assert cli.check_trajectory(traj, target, LIMITS) is None

    @given(finite(-5, 5), finite(-2, 2), finite(-1, 1), finite(-10, 10), finite(0, 1))
    @settings(max_examples=100, deadline=None)
    def test_replanning_on_the_way_does_not_lose_time(self, p0, v0, a0, goal, fraction):
        target = PartialTarget(goal, 0.0, 0.0)
        first = axis_planner.plan(AxisState(p0, v0, a0), target, LIMITS)
        t = fraction * first.total_duration
        again = axis_planner.plan(evaluate(first, t), target, LIMITS)
        assert again.total_duration == pytest.approx(first.total_duration - t, abs=1e-6)
